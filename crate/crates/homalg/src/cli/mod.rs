//! The `homalg` command line: workspace files in, a report out.
//!
//! Exit codes: `0` when every check passes, `1` when some check fails, `2` on usage,
//! parse or validation errors. The machine-readable report (JSON) never contains timing.

pub mod workspace;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use crate::complex::{tensor_complexes, ChainMap};
use crate::cotorsion::{check_compatibility, ClassId, ClassSpec, CotorsionPairSpec};
use crate::error::{Error, Result};
use crate::kaplansky::{flat_subcomplex_envelope, kaplansky_filtration, verify_envelope, KaplanskyConfig};
use crate::matrix::Matrix;
use crate::model::{
    check_model_axioms, check_monoidal, classify_map, cofibrant_replacement, derived_tensor, factor_map, factor_map_soa,
    fibrant_replacement, free_replacement, solve_lifting, FactorMode, ModelStructureSpec, StructureId, FLAG_NAMES,
};
use crate::module::{ext_n, free_resolution, tor_n, FpModule, ModuleMap};
use crate::quiver::{is_flat_rep_module, is_quasi_coherent, quiver_kaplansky_witness, rep_cardinality};
use crate::report::SuiteReport;
use crate::ring::Ring;

pub use workspace::{parse_workspace, serialize_workspace, Workspace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Text,
    Machine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Cofibrant,
    Fibrant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PairChoice {
    /// The pair underlying `--structure`.
    Default,
    /// All modules on the left; not a cotorsion pair.
    Mismatched,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    CofTrivfib,
    TrivcofFib,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClassArg {
    All,
    Projective,
    Flat,
    Injective,
}

#[derive(Parser, Debug)]
#[command(name = "homalg", version, about = "Exact homological algebra over Z, Z/n and F_p")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub workspace: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 20)]
    pub samples: usize,
    #[arg(long, global = true, default_value_t = 2)]
    pub gamma: usize,
    #[arg(long = "step-budget", global = true, default_value_t = 16)]
    pub step_budget: usize,
    /// Degree window `lo..hi` for generating sets and test families.
    #[arg(long, global = true, default_value = "-2..3", allow_hyphen_values = true)]
    pub window: String,
    #[arg(long, global = true, default_value = "projective")]
    pub structure: String,
    /// `Z`, `Zmod<n>` or `Fp<p>`.
    #[arg(long, global = true, default_value = "Z")]
    pub ring: String,
    /// Also write the machine-readable report here.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Emit::Text)]
    pub emit: Emit,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Free resolution of a module, or a free replacement of a complex.
    Resolve {
        #[arg(long)]
        module: Option<String>,
        #[arg(long)]
        complex: Option<String>,
        #[arg(long, default_value_t = 3)]
        length: usize,
    },
    /// `Ext^k(A, B)` for `k` up to the maximum degree.
    Ext {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long = "max-degree", default_value_t = 3)]
        max_degree: usize,
    },
    /// `Tor_k(A, B)` for `k` up to the maximum degree.
    Tor {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long = "max-degree", default_value_t = 3)]
        max_degree: usize,
    },
    /// Tensor product of two modules or two complexes.
    Tensor {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Factors a chain map in the chosen mode and re-verifies the certificates.
    Factor {
        #[arg(long)]
        map: String,
        #[arg(long, value_enum, default_value_t = ModeArg::CofTrivfib)]
        mode: ModeArg,
        /// Run the small object argument literally.
        #[arg(long)]
        soa: bool,
    },
    /// Solves a named lifting problem.
    Lift {
        #[arg(long)]
        problem: String,
    },
    /// Cofibrant or fibrant replacement of a complex.
    Replace {
        #[arg(long)]
        complex: String,
        #[arg(long, value_enum, default_value_t = Side::Cofibrant)]
        side: Side,
    },
    /// Homology of `Q(X) ⊗ Y` for a cofibrant replacement `Q(X)`.
    DerivedTensor {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Seeded model-category axiom checks.
    ModelCheck,
    /// Seeded monoidal-structure checks.
    MonoidalCheck {
        #[arg(long, value_enum, default_value_t = PairChoice::Default)]
        pair: PairChoice,
    },
    /// Resolving, Ext-vanishing and intersection verdicts for a cotorsion pair.
    CompatCheck {
        #[arg(long, value_enum, default_value_t = PairChoice::Default)]
        pair: PairChoice,
    },
    /// Filters `B` (or `B/A` for a mono `--map A -> B`) by small class quotients.
    KaplanskyFiltrate {
        #[arg(long)]
        module: Option<String>,
        #[arg(long)]
        map: Option<String>,
        #[arg(long, value_enum)]
        class: Option<ClassArg>,
    },
    /// Flat-subcomplex envelope of `X ⊆ F`, given by the inclusion chain map.
    Envelope {
        #[arg(long)]
        chainmap: String,
    },
    /// Quasi-coherence, flatness, cardinality and a witness for a quiver module.
    QuiverCheck {
        #[arg(long)]
        repmodule: String,
    },
}

pub fn parse_ring(s: &str) -> Result<Ring> {
    let bad = || Error::Validation(format!("unknown ring '{s}' (expected Z, Zmod<n> or Fp<p>)"));
    let num = |t: &str| t.trim_start_matches('/').trim().parse::<u64>().map_err(|_| bad());
    if s == "Z" {
        Ok(Ring::Integers)
    } else if let Some(n) = s.strip_prefix("Zmod").or_else(|| s.strip_prefix("Z/")) {
        Ring::zmod(num(n)?)
    } else if let Some(p) = s.strip_prefix("Fp").or_else(|| s.strip_prefix('F')) {
        Ring::fp(num(p)?)
    } else {
        Err(bad())
    }
}

pub fn parse_window(s: &str) -> Result<(i64, i64)> {
    let bad = || Error::Validation(format!("window must be lo..hi, got '{s}'"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let w = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if w.0 > w.1 {
        return Err(bad());
    }
    Ok(w)
}

struct Ctx {
    cli: Cli,
    ws: Option<Workspace>,
    cfg: KaplanskyConfig,
    window: (i64, i64),
    structure: StructureId,
}

impl Ctx {
    fn ws(&self) -> Result<&Workspace> {
        self.ws.as_ref().ok_or_else(|| Error::Validation("this command needs --workspace".into()))
    }

    fn spec(&self, ring: &Ring) -> Result<ModelStructureSpec> {
        ModelStructureSpec::new(ring, self.structure, self.window, self.cfg)
    }

    fn pair(&self, ring: &Ring, choice: PairChoice) -> Result<CotorsionPairSpec> {
        match choice {
            PairChoice::Mismatched => Ok(CotorsionPairSpec::mismatched(ring, self.cfg.gamma)),
            PairChoice::Default => Ok(self.spec(ring)?.pair),
        }
    }

    fn report(&self, name: &str) -> SuiteReport {
        SuiteReport::new(name, self.cli.seed, vec![])
    }
}

fn describe_map(f: &ChainMap) -> String {
    format!("{} => {}", f.source(), f.target())
}

fn flags_of(r: &mut SuiteReport, prefix: &str, f: &ChainMap, spec: &ModelStructureSpec) -> Result<()> {
    let c = classify_map(f, spec)?;
    let names: Vec<&str> = FLAG_NAMES.iter().zip(c.flags()).filter(|(_, b)| *b).map(|(n, _)| *n).collect();
    r.result(format!("{prefix}.flags"), if names.is_empty() { "none".into() } else { names.join(" ") });
    Ok(())
}

fn run(ctx: &Ctx) -> Result<SuiteReport> {
    let cli = &ctx.cli;
    match &cli.command {
        Command::Resolve { module, complex, length } => {
            let ws = ctx.ws()?;
            let mut r = ctx.report("resolve");
            match (module, complex) {
                (Some(m), None) => {
                    let m = ws.module(m)?;
                    let res = free_resolution(m, *length);
                    for (i, rank) in res.ranks.iter().enumerate() {
                        r.result(format!("rank.{i}"), rank);
                    }
                    for i in 1..res.ranks.len() {
                        r.result(format!("d.{i}"), res.d(i));
                    }
                    let maps = res.maps();
                    r.check("augmentation-onto", maps[0].is_epi(), || "F_0 -> M is not onto".into());
                    for i in 1..maps.len() {
                        r.check(format!("d-squared/{i}"), maps[i - 1].compose(&maps[i]).is_zero(), || format!("d_{} d_{i} != 0", i - 1));
                        let exact = crate::module::homology_at(&maps[i], &maps[i - 1]).is_zero();
                        if i + 1 < maps.len() || res.length() < *length {
                            r.check(format!("exact/{}", i - 1), exact, || format!("homology at F_{}", i - 1));
                        }
                    }
                }
                (None, Some(x)) => {
                    let x = ws.complex(x)?;
                    let (p, truncated) = free_replacement(x);
                    r.result("replacement", p.source());
                    r.check("epi", p.is_epi(), || describe_map(&p));
                    r.check("quasi-iso", p.is_quasi_iso(), || if truncated { "stopped at the window edge".into() } else { describe_map(&p) });
                }
                _ => return Err(Error::Validation("give exactly one of --module or --complex".into())),
            }
            Ok(r)
        }
        Command::Ext { a, b, max_degree } | Command::Tor { a, b, max_degree } => {
            let ws = ctx.ws()?;
            let (m, n) = (ws.module(a)?, ws.module(b)?);
            let is_ext = matches!(cli.command, Command::Ext { .. });
            let mut r = ctx.report(if is_ext { "ext" } else { "tor" });
            for k in 0..=*max_degree {
                let v = if is_ext { ext_n(m, n, k)? } else { tor_n(m, n, k)? };
                let f: Vec<String> = v.invariant_factors().iter().map(|d| d.to_string()).collect();
                r.result(format!("{}.{k}", if is_ext { "ext" } else { "tor" }), format!("{v} [{}]", f.join(",")));
            }
            Ok(r)
        }
        Command::Tensor { a, b } => {
            let ws = ctx.ws()?;
            let mut r = ctx.report("tensor");
            if let (Ok(m), Ok(n)) = (ws.module(a), ws.module(b)) {
                r.result("tensor", m.tensor(n));
            } else {
                let (x, y) = (ws.complex_or_sphere(a)?, ws.complex_or_sphere(b)?);
                let t = tensor_complexes(&x, &y);
                r.result("tensor", &t);
                for n in t.degrees() {
                    r.result(format!("homology.{n}"), t.homology(n));
                }
            }
            Ok(r)
        }
        Command::Factor { map, mode, soa } => {
            let ws = ctx.ws()?;
            let f = ws.chainmap(map)?;
            let spec = ctx.spec(f.ring())?;
            let mode = match mode {
                ModeArg::CofTrivfib => FactorMode::CofThenTrivFib,
                ModeArg::TrivcofFib => FactorMode::TrivCofThenFib,
            };
            let fz = if *soa { factor_map_soa(f, mode, &spec)? } else { factor_map(f, mode, &spec)? };
            let mut r = ctx.report(&format!("factor --mode {mode}{}", if *soa { " --soa" } else { "" }));
            r.result("middle", fz.i.target());
            r.result("window", format!("{}..{}", fz.window.0, fz.window.1));
            r.result("truncated", fz.truncated);
            flags_of(&mut r, "i", &fz.i, &spec)?;
            flags_of(&mut r, "p", &fz.p, &spec)?;
            r.check("composite", fz.p.compose(&fz.i).equals(f), || "p ∘ i != f".into());
            let v = fz.verify(&spec);
            r.check("certificates", v.is_ok(), || v.err().map(|e| e.to_string()).unwrap_or_default());
            match &fz.cells {
                Some(c) => {
                    r.result("cells", c.cells.len());
                    r.check("cells", c.verify(), || "cell chain does not compose to i".into());
                }
                None => r.result("cells", fz.cell_note.clone().unwrap_or_default()),
            }
            Ok(r)
        }
        Command::Lift { problem } => {
            let ws = ctx.ws()?;
            let prob = ws.problems.get(problem).ok_or_else(|| Error::Validation(format!("no lift problem '{problem}'")))?;
            let spec = ctx.spec(prob.i.ring())?;
            let h = solve_lifting(prob, &spec)?;
            let mut r = ctx.report("lift");
            for n in h.source().degrees() {
                r.result(format!("h.{n}"), h.component(n).matrix());
            }
            r.check("upper-triangle", h.compose(&prob.i).equals(&prob.top), || "h ∘ i != top".into());
            r.check("lower-triangle", prob.p.compose(&h).equals(&prob.bottom), || "p ∘ h != bottom".into());
            Ok(r)
        }
        Command::Replace { complex, side } => {
            let ws = ctx.ws()?;
            let x = ws.complex(complex)?;
            let spec = ctx.spec(x.ring())?;
            let (q, fz) = match side {
                Side::Cofibrant => cofibrant_replacement(x, &spec)?,
                Side::Fibrant => fibrant_replacement(x, &spec)?,
            };
            let mut r = ctx.report(&format!("replace --side {}", if *side == Side::Cofibrant { "cofibrant" } else { "fibrant" }));
            r.result("replacement", &q);
            r.result("truncated", fz.truncated);
            let v = fz.verify(&spec);
            let note = if fz.truncated { " (truncated at the window edge)" } else { "" };
            r.check("certificates", v.is_ok(), || format!("{}{note}", v.err().map(|e| e.to_string()).unwrap_or_default()));
            Ok(r)
        }
        Command::DerivedTensor { a, b } => {
            let ws = ctx.ws()?;
            let (x, y) = (ws.complex_or_sphere(a)?, ws.complex_or_sphere(b)?);
            let spec = ctx.spec(x.ring())?;
            let dt = derived_tensor(&x, &y, &spec)?;
            let mut r = ctx.report("derived-tensor");
            r.result("replacement", dt.replacement.i.target());
            for (n, h) in &dt.homology {
                r.result(format!("homology.{n}"), h);
            }
            r.check("replacement-weq", dt.replacement.p.is_quasi_iso(), || "replacement is not a quasi-isomorphism".into());
            Ok(r)
        }
        Command::ModelCheck => {
            let ring = parse_ring(&cli.ring)?;
            let spec = ctx.spec(&ring)?;
            let (mut r, _) = check_model_axioms(&spec, cli.seed, cli.samples)?;
            r.command = format!("model-check --structure {} --ring {} --samples {}", ctx.structure, ring, cli.samples);
            Ok(r)
        }
        Command::MonoidalCheck { pair } => {
            let ring = parse_ring(&cli.ring)?;
            let spec = match pair {
                PairChoice::Default => ctx.spec(&ring)?,
                PairChoice::Mismatched => ModelStructureSpec::with_pair(ctx.structure, ctx.pair(&ring, *pair)?, ctx.window, ctx.cfg)?,
            };
            let mut r = check_monoidal(&spec, cli.seed, cli.samples)?;
            let tag = if *pair == PairChoice::Mismatched { " --pair mismatched" } else { "" };
            r.command = format!("monoidal-check --structure {} --ring {} --samples {}{tag}", ctx.structure, ring, cli.samples);
            Ok(r)
        }
        Command::CompatCheck { pair } => {
            let ring = parse_ring(&cli.ring)?;
            let p = ctx.pair(&ring, *pair)?;
            let rep = check_compatibility(&p, cli.samples)?;
            let tag = if *pair == PairChoice::Mismatched { " --pair mismatched" } else { "" };
            let mut r = ctx.report(&format!("compat-check --structure {} --ring {ring}{tag}", ctx.structure));
            for v in rep.verdicts() {
                r.result(format!("{}.checked", v.name), v.checked);
                r.check(v.name.clone(), v.pass, || v.counterexamples.first().cloned().unwrap_or_default());
            }
            Ok(r)
        }
        Command::KaplanskyFiltrate { module, map, class } => {
            let ws = ctx.ws()?;
            let a = match (module, map) {
                (Some(m), None) => {
                    let b = ws.module(m)?;
                    ModuleMap::zero(&FpModule::zero(b.ring()), b)
                }
                (None, Some(f)) => ws.map(f)?,
                _ => return Err(Error::Validation("give exactly one of --module or --map".into())),
            };
            let id = match class.unwrap_or(match ctx.structure {
                StructureId::Projective => ClassArg::Projective,
                StructureId::Flat => ClassArg::Flat,
                StructureId::Injective => ClassArg::Injective,
            }) {
                ClassArg::All => ClassId::AllObjects,
                ClassArg::Projective => ClassId::Projective,
                ClassArg::Flat => ClassId::Flat,
                ClassArg::Injective => ClassId::Injective,
            };
            let cls = ClassSpec::new(id, cli.gamma);
            let chain = kaplansky_filtration(&a, &cls, &ctx.cfg)?;
            let mut r = ctx.report("kaplansky-filtrate");
            for (i, q) in chain.quotients.iter().enumerate() {
                r.result(format!("quotient.{i}"), q);
            }
            let v = chain.validate(&ModuleMap::identity(a.target()));
            r.check("filtration", v.is_ok(), || v.err().map(|e| e.to_string()).unwrap_or_default());
            Ok(r)
        }
        Command::Envelope { chainmap } => {
            let ws = ctx.ws()?;
            let x = ws.chainmap(chainmap)?;
            let pair = CotorsionPairSpec::flat(x.ring(), cli.gamma);
            let env = flat_subcomplex_envelope(x.target(), x, &pair, &ctx.cfg)?;
            let mut r = ctx.report("envelope");
            r.result("envelope", env.inclusion.source());
            r.result("gens-bound", env.gens_bound);
            let v = verify_envelope(x.target(), x, &env, &pair);
            r.check("envelope", v.is_ok(), || v.err().map(|e| e.to_string()).unwrap_or_default());
            Ok(r)
        }
        Command::QuiverCheck { repmodule } => {
            let ws = ctx.ws()?;
            let m = ws.repmodules.get(repmodule).ok_or_else(|| Error::Validation(format!("no repmodule '{repmodule}'")))?;
            let mut r = ctx.report("quiver-check");
            let qc = is_quasi_coherent(m);
            let flat = is_flat_rep_module(m);
            r.result("cardinality", rep_cardinality(m));
            r.result("quasi-coherent", qc.is_none());
            if let Some(e) = &qc {
                r.result("failing-edge", e);
            }
            r.result("flat", flat);
            if qc.is_none() && flat && m.rep.vertices.iter().all(|(_, ring)| ring.is_finite()) {
                let seed: Vec<Matrix> = m.at.iter().map(|x| Matrix::zero(x.ring(), x.gens(), 0)).collect();
                let w = quiver_kaplansky_witness(m, &seed)?;
                r.result("witness", &w.sub);
                r.result("witness-cardinality", rep_cardinality(&w.sub));
                let v = w.validate();
                r.check("witness", v.is_ok(), || v.err().map(|e| e.to_string()).unwrap_or_default());
            }
            Ok(r)
        }
    }
}

/// Runs one invocation and returns `(exit code, standard output)`.
pub fn run_command<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.to_string());
        }
    };
    let start = Instant::now();
    type Setup = (Option<Workspace>, KaplanskyConfig, (i64, i64), StructureId);
    let setup = |cli: &Cli| -> Result<Setup> {
        let ws = match &cli.workspace {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::Validation(format!("cannot read {}: {e}", p.display())))?;
                Some(parse_workspace(&text)?)
            }
            None => None,
        };
        let cfg = KaplanskyConfig::new(cli.gamma, cli.step_budget)?;
        let window = parse_window(&cli.window)?;
        let structure = cli.structure.parse()?;
        Ok((ws, cfg, window, structure))
    };
    let ctx = match setup(&cli) {
        Ok((ws, cfg, window, structure)) => Ctx { cli, ws, cfg, window, structure },
        Err(e) => return (2, format!("error: {e}\n")),
    };
    let report = match run(&ctx) {
        Ok(r) => r,
        Err(e) => return (2, format!("error: {e}\n")),
    };
    let json = report.to_json();
    if let Some(p) = &ctx.cli.out {
        if let Err(e) = std::fs::write(p, format!("{json}\n")) {
            return (2, format!("error: cannot write {}: {e}\n", p.display()));
        }
    }
    let out = match ctx.cli.emit {
        Emit::Machine => format!("{json}\n"),
        Emit::Text => format!("{}wall time: {:.3}s\n", report.to_text(), start.elapsed().as_secs_f64()),
    };
    (if report.violations() > 0 { 1 } else { 0 }, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# a small workspace
ring R Z
module M over R gens 1 rels [[2]]
module F over R gens 1 rels []
map two : F -> F matrix [[2]]
complex X over R sphere 0 M
complex P over R degrees 0..1 object 0 F object 1 F diff 1 two
chainmap rho : P -> X comp 0 q
map q : F -> M matrix [[1]]
";

    #[test]
    fn parses_and_round_trips() {
        let text = "ring R Z\nmodule M over R gens 1 rels [[2]]\ncomplex X over R sphere 0 M\n";
        let ws = parse_workspace(text).unwrap();
        assert_eq!(ws.decls.len(), 3);
        let again = parse_workspace(&serialize_workspace(&ws)).unwrap();
        assert_eq!(ws, again);
        assert_eq!(serialize_workspace(&again), serialize_workspace(&ws));
    }

    #[test]
    fn diagnostics() {
        // `q` is used before it is declared.
        match parse_workspace(SAMPLE) {
            Err(Error::Parse { line, column, message }) => {
                assert_eq!((line, column), (8, 30));
                assert!(message.contains("'q'"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bad = "ring R Z\nmodule F over R gens 1\nmap one : F -> F matrix [[1]]\ncomplex X over R degrees 0..2 object 0 F object 1 F object 2 F diff 1 one diff 2 one\n";
        match parse_workspace(bad) {
            Err(Error::Validation(m)) => assert!(m.contains("X") && m.contains("degree 2"), "{m}"),
            other => panic!("{other:?}"),
        }
        match parse_workspace("ring R Q\n") {
            Err(Error::Parse { line: 1, column: 8, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_workspace("ring R Z\nring R Z\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn rings_and_windows() {
        assert_eq!(parse_ring("Zmod4").unwrap(), Ring::zmod(4).unwrap());
        assert_eq!(parse_ring("Fp3").unwrap(), Ring::fp(3).unwrap());
        assert_eq!(parse_ring("Z").unwrap(), Ring::Integers);
        assert!(parse_ring("Q").is_err());
        assert_eq!(parse_window("-2..3").unwrap(), (-2, 3));
        assert!(parse_window("3..1").is_err());
    }
}
