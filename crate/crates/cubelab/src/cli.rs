//! Command-line surface: parse instance files, run checkers and searches,
//! emit reports and DOT diagrams with stable exit codes.
//!
//! Exit-code contract: 0 = property holds / verified (for `search`: at least
//! one witness found), 1 = property fails with witness (for `search`: none
//! found), 2 = input error. stdout carries machine JSON only; human-readable
//! summaries go to stderr behind `--verbose`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::abfg::{lattice_from_symbolic, IntLattice};
use crate::cubes::{
    build_cube_group, build_cube_set, build_sequence_fork, build_sequence_pointed_ab,
    build_sequence_pointed_group, check_distributive, cube_from_json, cube_to_dot, cube_to_json,
    grid_to_dot, is_n_cubic_extension, lattice_from_json, sequence_from_json, sequence_to_json,
    verify_sequence, BuiltCube, EqRelLattice, SetAmbient, ZLatticeOps,
};
use crate::grpalg::{FinGroup, NormalSubgroup};
use crate::relcore::{EqRel, FinSet};
use crate::report::CheckReport;
use crate::{oracle, Error, Result};

#[derive(Parser)]
#[command(name = "cubelab", version, about = "Congruence lattices, cubic extensions and 3^n-diagrams")]
pub struct Cli {
    /// Human-readable summaries on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    /// Thread count for parallel library drivers.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the distributivity condition of an instance file.
    CheckDistributive {
        file: PathBuf,
        /// Use only the first N relations of the instance.
        #[arg(long)]
        n_override: Option<usize>,
    },
    /// Build the quotient cube of an instance file.
    BuildCube {
        file: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check whether a cube artifact or instance is an n-cubic extension.
    CheckExtension { file: PathBuf },
    /// Build a 3^n diagram from an instance file.
    BuildDiagram {
        file: PathBuf,
        /// Pointed grid of subquotients (group or fgab context).
        #[arg(long, conflicts_with = "fork")]
        pointed: bool,
        /// Denormalised grid of kernel pairs.
        #[arg(long)]
        fork: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Verify every axis-parallel line of a stored diagram.
    VerifyDiagram { file: PathBuf },
    /// Run a counterexample search from a search-spec file.
    Search {
        file: PathBuf,
        /// Override the seed in the spec file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a stored cube or diagram artifact as DOT.
    ExportDot {
        file: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

/// A parsed instance file: a context plus its tuple of subobjects.
enum LoadedInstance {
    Finset { carrier: FinSet, rels: Vec<EqRel> },
    Group { g: Arc<FinGroup>, subs: Vec<NormalSubgroup> },
    Ab { rank: usize, base: IntLattice, subs: Vec<IntLattice> },
}

fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn usize_array(v: &Value, what: &str) -> Result<Vec<usize>> {
    v.as_array()
        .ok_or_else(|| Error::Malformed(format!("{what} must be an array")))?
        .iter()
        .map(|x| {
            x.as_u64().map(|u| u as usize).ok_or_else(|| {
                Error::Malformed(format!("{what} entries must be non-negative integers"))
            })
        })
        .collect()
}

/// Close a set of group elements under multiplication.
fn subgroup_closure(g: &FinGroup, gens: &[usize]) -> Result<Vec<usize>> {
    let mut inside = vec![false; g.order()];
    inside[g.identity] = true;
    let mut stack: Vec<usize> = vec![g.identity];
    for &x in gens {
        if x >= g.order() {
            return Err(Error::Malformed(format!("generator {x} out of range")));
        }
        if !inside[x] {
            inside[x] = true;
            stack.push(x);
        }
    }
    let mut elements: Vec<usize> = stack.clone();
    while let Some(x) = stack.pop() {
        for y in elements.clone() {
            for z in [g.mul(x, y), g.mul(y, x)] {
                if !inside[z] {
                    inside[z] = true;
                    stack.push(z);
                    elements.push(z);
                }
            }
        }
    }
    elements.sort_unstable();
    Ok(elements)
}

fn load_group_subobject(g: &Arc<FinGroup>, v: &Value) -> Result<NormalSubgroup> {
    if let Some(e) = v.get("elements") {
        NormalSubgroup::new(g.clone(), usize_array(e, "elements")?)
    } else if let Some(gens) = v.get("generators") {
        NormalSubgroup::new(g.clone(), subgroup_closure(g, &usize_array(gens, "generators")?)?)
    } else {
        Err(Error::Malformed("group subobject needs elements or generators".into()))
    }
}

fn load_lattice_subobject(rank: usize, v: &Value) -> Result<IntLattice> {
    let lat = if let Some(sym) = v.get("symbolic") {
        let gens: Vec<String> = sym
            .as_array()
            .ok_or_else(|| Error::Malformed("symbolic must be an array of strings".into()))?
            .iter()
            .map(|s| {
                s.as_str()
                    .map(|t| t.to_string())
                    .ok_or_else(|| Error::Malformed("symbolic entries must be strings".into()))
            })
            .collect::<Result<_>>()?;
        lattice_from_symbolic(&gens)?
    } else {
        lattice_from_json(v)?
    };
    if lat.ambient_rank != rank {
        return Err(Error::RankMismatch(format!(
            "subobject has ambient rank {}, context has {rank}",
            lat.ambient_rank
        )));
    }
    Ok(lat)
}

fn load_instance(v: &Value) -> Result<LoadedInstance> {
    let ctx = &v["context"];
    let subs = v
        .get("relations")
        .or_else(|| v.get("subobjects"))
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Malformed("instance needs a relations/subobjects array".into()))?;
    match ctx["kind"].as_str() {
        Some("finset") => {
            let size = ctx["size"]
                .as_u64()
                .ok_or_else(|| Error::Malformed("finset context needs size".into()))?
                as usize;
            let carrier = FinSet::new(size);
            let rels = subs
                .iter()
                .map(|r| {
                    let blocks = r["blocks"]
                        .as_array()
                        .ok_or_else(|| Error::Malformed("finset relation needs blocks".into()))?
                        .iter()
                        .map(|b| usize_array(b, "block"))
                        .collect::<Result<Vec<_>>>()?;
                    EqRel::from_blocks(carrier.clone(), blocks)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LoadedInstance::Finset { carrier, rels })
        }
        Some("cayley") => {
            let table: Vec<Vec<usize>> = serde_json::from_value(ctx["table"].clone())?;
            let name = ctx["name"].as_str().map(|s| s.to_string());
            let g = Arc::new(FinGroup::from_table(table, name)?);
            let subs =
                subs.iter().map(|s| load_group_subobject(&g, s)).collect::<Result<Vec<_>>>()?;
            Ok(LoadedInstance::Group { g, subs })
        }
        Some("abelian_product") => {
            let invariants: Vec<usize> = serde_json::from_value(ctx["invariants"].clone())?;
            let mut g = FinGroup::cyclic(1);
            for m in invariants {
                g = FinGroup::product(&g, &FinGroup::cyclic(m));
            }
            let g = Arc::new(g);
            let subs =
                subs.iter().map(|s| load_group_subobject(&g, s)).collect::<Result<Vec<_>>>()?;
            Ok(LoadedInstance::Group { g, subs })
        }
        Some("fgab") => {
            let rank = ctx["rank"]
                .as_u64()
                .ok_or_else(|| Error::Malformed("fgab context needs rank".into()))?
                as usize;
            let base = match ctx.get("presentation") {
                Some(p) if !p.as_array().map(|a| a.is_empty()).unwrap_or(true) => {
                    let vecs: Vec<Vec<i64>> = serde_json::from_value(p.clone())?;
                    IntLattice::from_vectors(rank, &vecs)?
                }
                _ => IntLattice::from_vectors(rank, &[])?,
            };
            let subs = subs
                .iter()
                .map(|s| load_lattice_subobject(rank, s))
                .collect::<Result<Vec<_>>>()?;
            Ok(LoadedInstance::Ab { rank, base, subs })
        }
        _ => Err(Error::Malformed("unknown context kind".into())),
    }
}

fn build_cube_of(inst: &LoadedInstance) -> Result<BuiltCube> {
    match inst {
        LoadedInstance::Finset { carrier, rels } => build_cube_set(carrier, rels),
        LoadedInstance::Group { g, subs } => build_cube_group(g, subs),
        LoadedInstance::Ab { .. } => Err(Error::Unsupported(
            "cube artifacts are element-level; use a finite context or build-diagram --pointed"
                .into(),
        )),
    }
}

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn emit_report(report: &CheckReport, verbose: bool) -> i32 {
    println!("{}", serde_json::to_string(report).expect("report serializes"));
    if verbose {
        eprintln!("verdict: {}", if report.verdict { "holds" } else { "fails" });
        for line in &report.trace {
            eprintln!("  {line}");
        }
    }
    i32::from(!report.verdict)
}

fn run_cmd(cli: &Cli) -> Result<i32> {
    if let Some(jobs) = cli.jobs {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    match &cli.cmd {
        Cmd::CheckDistributive { file, n_override } => {
            let inst = load_instance(&read_json(file)?)?;
            let report = match &inst {
                LoadedInstance::Finset { rels, .. } => {
                    let rels = truncate(rels, *n_override)?;
                    check_distributive(&EqRelLattice, &rels)?
                }
                LoadedInstance::Group { subs, .. } => {
                    let rels: Vec<EqRel> =
                        subs.iter().map(crate::grpalg::congruence_of).collect();
                    let rels = truncate(&rels, *n_override)?;
                    check_distributive(&EqRelLattice, &rels)?
                }
                LoadedInstance::Ab { subs, .. } => {
                    let subs = truncate(subs, *n_override)?;
                    check_distributive(&ZLatticeOps, &subs)?
                }
            };
            Ok(emit_report(&report, cli.verbose))
        }
        Cmd::BuildCube { file, out } => {
            let inst = load_instance(&read_json(file)?)?;
            let built = build_cube_of(&inst)?;
            write_output(out, &serde_json::to_string_pretty(&cube_to_json(&built))?)?;
            if cli.verbose {
                eprintln!("built {}-cube", built.cube.n);
            }
            Ok(0)
        }
        Cmd::CheckExtension { file } => {
            let v = read_json(file)?;
            let cube = if v.get("vertices").is_some() {
                cube_from_json(&v)?
            } else {
                build_cube_of(&load_instance(&v)?)?.cube
            };
            let report = is_n_cubic_extension(&SetAmbient, &cube)?;
            Ok(emit_report(&report, cli.verbose))
        }
        Cmd::BuildDiagram { file, pointed, fork, out } => {
            if *pointed == *fork {
                return Err(Error::Malformed("pick exactly one of --pointed / --fork".into()));
            }
            let inst = load_instance(&read_json(file)?)?;
            let seq = if *pointed {
                match &inst {
                    LoadedInstance::Group { g, subs } => build_sequence_pointed_group(g, subs)?,
                    LoadedInstance::Ab { rank, base, subs } => {
                        build_sequence_pointed_ab(*rank, base, subs)?
                    }
                    LoadedInstance::Finset { .. } => {
                        return Err(Error::Unsupported(
                            "pointed diagrams need a pointed context (group or fgab)".into(),
                        ))
                    }
                }
            } else {
                match &inst {
                    LoadedInstance::Finset { carrier, rels } => {
                        build_sequence_fork(carrier, rels)?
                    }
                    LoadedInstance::Group { g, subs } => {
                        let carrier = FinSet::new(g.order());
                        let rels: Vec<EqRel> =
                            subs.iter().map(crate::grpalg::congruence_of).collect();
                        build_sequence_fork(&carrier, &rels)?
                    }
                    LoadedInstance::Ab { .. } => {
                        return Err(Error::Unsupported(
                            "fork diagrams are element-level; use a finite context".into(),
                        ))
                    }
                }
            };
            write_output(out, &serde_json::to_string_pretty(&sequence_to_json(&seq))?)?;
            if cli.verbose {
                eprintln!("built 3^{} diagram", seq.n());
            }
            Ok(0)
        }
        Cmd::VerifyDiagram { file } => {
            let seq = sequence_from_json(&read_json(file)?)?;
            let report = verify_sequence(&seq)?;
            Ok(emit_report(&report, cli.verbose))
        }
        Cmd::Search { file, seed } => {
            let mut spec: oracle::SearchSpec = serde_json::from_value(read_json(file)?)?;
            if let Some(s) = seed {
                spec.seed = *s;
            }
            let witnesses = oracle::search(&spec)?;
            for w in &witnesses {
                println!("{}", serde_json::to_string(w)?);
            }
            if cli.verbose {
                eprintln!("{} witnesses", witnesses.len());
            }
            Ok(i32::from(witnesses.is_empty()))
        }
        Cmd::ExportDot { file, out } => {
            let v = read_json(file)?;
            let dot = if v.get("mode").is_some() {
                grid_to_dot(&sequence_from_json(&v)?)?
            } else if v.get("vertices").is_some() {
                cube_to_dot(&cube_from_json(&v)?)
            } else {
                return Err(Error::Malformed(
                    "export-dot takes a cube or diagram artifact".into(),
                ));
            };
            write_output(out, &dot)?;
            Ok(0)
        }
    }
}

fn truncate<T: Clone>(items: &[T], n_override: Option<usize>) -> Result<Vec<T>> {
    match n_override {
        None => Ok(items.to_vec()),
        Some(n) if n <= items.len() => Ok(items[..n].to_vec()),
        Some(n) => Err(Error::Malformed(format!(
            "--n-override {n} exceeds the {} declared relations",
            items.len()
        ))),
    }
}

/// Entry point used by the binary and by integration tests; returns the exit
/// code instead of exiting so it stays testable in-process.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return code;
        }
    };
    match run_cmd(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            println!("{}", json!({ "error": e.to_string() }));
            2
        }
    }
}
