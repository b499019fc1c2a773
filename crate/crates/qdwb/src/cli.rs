//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage, input, format or shape errors, 3 a
//! verification failure, 10 invalid solver input, 11..15 failure in solver
//! step 1..5 (rank screen, low-pass quadruple, regularisation, dual scaling,
//! high-pass least squares).

use crate::design::{
    apply_phases, concentration_check, default_phases, frame_zone_overlaps, phase_constraint_check, shannon_bank,
    shearlet_dual_amplitudes, smoothed_frame_bank, DualProfile, FilterBank, Role, FRAME_KAPPA,
};
use crate::io::{self, GrayImage};
use crate::lattice::{FreqGrid, PartitionMask};
use crate::prcheck::{self, Mode, VerificationReport};
use crate::solver::{self, Regularization, SolverConfig};
use crate::transform::{self, TransformMode};
use crate::{Error, C64};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;
pub const EXIT_SOLVER_BASE: i32 = 10;

#[derive(Parser, Debug)]
#[command(
    name = "qdwb",
    version,
    about = "Directional wavelet filter banks on the dyadic quincunx lattice"
)]
pub struct Cli {
    /// key=value run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Half grid size (symbols are 2N x 2N)
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(short = 'o', long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Verification tolerance
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DesignKind {
    Shannon,
    Frame,
    DualInputs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    Basis,
    Frame,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Critical,
    Frame,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a bank and write it to a bank file
    Design {
        kind: DesignKind,
        /// Transition half-width in radians (frame)
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Complete dual inputs to a biorthogonal pair
    SolveBiorth { inputs: PathBuf },
    /// Check reconstruction conditions of a bank or a primal/dual pair
    Verify {
        bank: PathBuf,
        #[arg(long)]
        dual: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "basis")]
        mode: VerifyMode,
    },
    /// Multi-level analysis/synthesis of a square image
    Transform {
        /// PGM or raw image (pyramid file with --inverse)
        image: Option<PathBuf>,
        #[arg(long)]
        bank: PathBuf,
        /// Synthesis bank (defaults to the analysis bank)
        #[arg(long)]
        dual: Option<PathBuf>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, value_enum, default_value = "critical")]
        mode: ModeArg,
        #[arg(long)]
        inverse: bool,
        #[arg(long)]
        roundtrip: bool,
        /// Use a seeded random image of this side instead of a file
        #[arg(long)]
        random: Option<usize>,
    },
    /// Scaling and wavelet atoms with decay table
    Atoms {
        bank: PathBuf,
        /// Truncation depth of the infinite product
        #[arg(long)]
        k: Option<u32>,
        /// Refinement factor
        #[arg(long)]
        r: Option<usize>,
    },
    /// One-dimensional optimisation oracle on the spline pair
    #[command(name = "oracle-1d")]
    Oracle1d,
    /// Weighted two-dimensional oracle on the tensor spline pair
    #[command(name = "oracle-2d")]
    Oracle2d {
        #[arg(long)]
        lambda: Option<f64>,
    },
}

/// Settings from a `key=value` file; every key has a default.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub eps: f64,
    pub k: u32,
    pub r: usize,
    pub lambda: f64,
    pub levels: usize,
    pub seed: u64,
    pub tol: Option<f64>,
    pub rank_tol: f64,
    pub null_tol: f64,
    pub ls_tol: f64,
    pub qp_tol: f64,
    pub plateau: f64,
    pub support: f64,
    /// `reciprocal-target` or `unit`.
    pub regularization: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverConfig::new(32);
        let p = DualProfile::default();
        RunConfig {
            n: 32,
            eps: std::f64::consts::PI / 8.0,
            k: 8,
            r: 8,
            lambda: 600.0,
            levels: 2,
            seed: 0,
            tol: None,
            rank_tol: s.rank_tol,
            null_tol: s.null_tol,
            ls_tol: s.ls_tol,
            qp_tol: s.qp_tol,
            plateau: p.plateau,
            support: p.support,
            regularization: "reciprocal-target".into(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut c = RunConfig::default();
        let mut seen = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key=value", no + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if seen.insert(k.to_string(), ()).is_some() {
                return Err(Error::Format(format!("line {}: duplicate key {k}", no + 1)));
            }
            let bad = || Error::Format(format!("line {}: bad value for {k}: {v}", no + 1));
            let f = || v.parse::<f64>().map_err(|_| bad());
            match k {
                "n" => c.n = v.parse().map_err(|_| bad())?,
                "eps" => c.eps = f()?,
                "k" => c.k = v.parse().map_err(|_| bad())?,
                "r" => c.r = v.parse().map_err(|_| bad())?,
                "lambda" => c.lambda = f()?,
                "levels" => c.levels = v.parse().map_err(|_| bad())?,
                "seed" => c.seed = v.parse().map_err(|_| bad())?,
                "tol" => c.tol = Some(f()?),
                "rank_tol" => c.rank_tol = f()?,
                "null_tol" => c.null_tol = f()?,
                "ls_tol" => c.ls_tol = f()?,
                "qp_tol" => c.qp_tol = f()?,
                "plateau" => c.plateau = f()?,
                "support" => c.support = f()?,
                "regularization" => match v {
                    "reciprocal-target" | "unit" => c.regularization = v.into(),
                    _ => return Err(bad()),
                },
                _ => return Err(Error::Format(format!("line {}: unknown key {k}", no + 1))),
            }
        }
        Ok(c)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut s = SolverConfig::new(self.n);
        s.rank_tol = self.rank_tol;
        s.null_tol = self.null_tol;
        s.ls_tol = self.ls_tol;
        s.qp_tol = self.qp_tol;
        s.lambda = self.lambda;
        s.regularization = if self.regularization == "unit" {
            Regularization::CField(vec![
                C64::new(1.0, 0.0);
                FreqGrid::new(self.n).map(|g| g.len()).unwrap_or(0)
            ])
        } else {
            Regularization::ReciprocalTarget(None)
        };
        s
    }
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct Exit {
    pub code: i32,
    pub msg: String,
}

fn input_err(e: impl std::fmt::Display) -> Exit {
    Exit {
        code: EXIT_INPUT,
        msg: e.to_string(),
    }
}

type CmdResult = Result<i32, Exit>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    configure_threads();
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.msg);
            e.code
        }
    }
}

/// Caps the worker pool at `QDWB_THREADS` when set.
pub fn configure_threads() {
    if let Some(n) = std::env::var("QDWB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, Exit> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::parse(&std::fs::read_to_string(p).map_err(input_err)?).map_err(input_err)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.n {
        c.n = n;
    }
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(t) = cli.tol {
        c.tol = Some(t);
    }
    Ok(c)
}

fn print_reports(out: &mut dyn Write, reports: &[VerificationReport]) -> bool {
    for r in reports {
        for l in r.lines() {
            let _ = writeln!(out, "{l}");
        }
    }
    reports.iter().all(|r| r.pass)
}

fn read_bank(p: &Path) -> Result<FilterBank, Exit> {
    io::read_bank(p)
        .map(|b| b.0)
        .map_err(|e| input_err(format!("{}: {e}", p.display())))
}

fn execute(cli: &Cli, out: &mut dyn Write) -> CmdResult {
    let cfg = load_config(cli)?;
    let out_path = |default: &str| cli.out.clone().unwrap_or_else(|| PathBuf::from(default));
    match &cli.cmd {
        Command::Design { kind, eps } => {
            let grid = FreqGrid::new(cfg.n).map_err(input_err)?;
            let mask = PartitionMask::new(grid);
            let (bank, reports, extra_ok, name) = match kind {
                DesignKind::Shannon => {
                    let tol = cfg.tol.unwrap_or(prcheck::TOL_EXACT);
                    let b = shannon_bank(grid, &mask);
                    let r = vec![
                        prcheck::identity_summation(&b, tol),
                        prcheck::shift_cancellation(&b, Mode::Basis, tol),
                    ];
                    (b, r, true, "shannon")
                }
                DesignKind::Frame => {
                    let eps = eps.unwrap_or(cfg.eps);
                    if !(eps > 0.0 && eps.is_finite()) {
                        return Err(input_err("eps must be positive"));
                    }
                    let overlaps = frame_zone_overlaps(grid, eps, FRAME_KAPPA);
                    if overlaps > 0 {
                        return Err(input_err(format!(
                            "eps {eps} is too wide: {overlaps} gridpoints in two transition zones"
                        )));
                    }
                    let tol = cfg.tol.unwrap_or(prcheck::TOL_EXACT);
                    let b = smoothed_frame_bank(grid, &mask, eps);
                    let r = vec![
                        prcheck::identity_summation(&b, tol),
                        prcheck::shift_cancellation(&b, Mode::Frame, tol),
                    ];
                    (b, r, true, "frame")
                }
                DesignKind::DualInputs => {
                    let profile = DualProfile {
                        plateau: cfg.plateau,
                        support: cfg.support,
                    };
                    let amps = shearlet_dual_amplitudes(grid, &mask, profile).map_err(input_err)?;
                    let phases = default_phases();
                    let b = apply_phases(grid, &amps, &phases);
                    let ph = phase_constraint_check(&phases);
                    let conc = concentration_check(&b, &mask);
                    let pf = |x: bool| if x { "PASS" } else { "FAIL" };
                    let _ = writeln!(
                        out,
                        "phase c11 {} c12 {} origin-det {}",
                        pf(ph.c11),
                        pf(ph.c12),
                        pf(ph.origin_det)
                    );
                    let _ = writeln!(
                        out,
                        "concentration domination {} support {} decay {} omega0 {} {}",
                        conc.domination.iter().sum::<usize>(),
                        conc.support.iter().sum::<usize>(),
                        conc.decay.iter().sum::<usize>(),
                        conc.omega0,
                        pf(conc.pass())
                    );
                    (b, vec![], ph.pass() && conc.pass(), "dual-inputs")
                }
            };
            let path = out_path(&format!("{name}.fbk"));
            io::write_bank(&path, &bank, &format!("design {name} n={}", cfg.n)).map_err(input_err)?;
            let ok = print_reports(out, &reports) && extra_ok;
            let _ = writeln!(out, "wrote {}", path.display());
            Ok(if ok { 0 } else { EXIT_VERIFY })
        }
        Command::SolveBiorth { inputs } => {
            let bank = read_bank(inputs)?;
            let mut sc = cfg.solver_config();
            sc.n = bank.grid.n();
            if let Regularization::CField(c) = &mut sc.regularization {
                c.resize(bank.grid.len(), C64::new(1.0, 0.0));
            }
            let (pair, trace) = match solver::run_algorithm1(&bank, &sc) {
                Ok(r) => r,
                Err(Error::Step { step, msg }) => {
                    return Err(Exit {
                        code: EXIT_SOLVER_BASE + step as i32,
                        msg: format!("step {step}: {msg}"),
                    })
                }
                Err(e) => {
                    return Err(Exit {
                        code: EXIT_SOLVER_BASE,
                        msg: e.to_string(),
                    })
                }
            };
            let base = out_path("biorth");
            let with = |ext: &str| {
                let mut s = base.as_os_str().to_owned();
                s.push(ext);
                PathBuf::from(s)
            };
            let prov = format!("solve-biorth {}", inputs.display());
            io::write_bank(&with(".primal.fbk"), &pair.primal, &prov).map_err(input_err)?;
            io::write_bank(&with(".dual.fbk"), &pair.dual, &prov).map_err(input_err)?;
            let mut lines = trace.lines();
            let reports = prcheck::biorth_conditions(&pair, cfg.tol.unwrap_or(sc.ls_tol));
            lines.extend(reports.iter().flat_map(|r| r.lines()));
            lines.push(format!("phase-mismatch {:.3e}", solver::phase_mismatch(&pair)));
            std::fs::write(with(".trace.txt"), lines.join("\n") + "\n").map_err(input_err)?;
            for l in &lines {
                let _ = writeln!(out, "{l}");
            }
            if reports.iter().all(|r| r.pass) {
                Ok(0)
            } else {
                Err(Exit {
                    code: EXIT_SOLVER_BASE + 5,
                    msg: "pair fails certification".into(),
                })
            }
        }
        Command::Verify { bank, dual, mode } => {
            let b = read_bank(bank)?;
            let reports = match dual {
                Some(d) => {
                    let d = read_bank(d)?;
                    let pair = crate::design::DualPair::new(b, d).map_err(input_err)?;
                    prcheck::biorth_conditions(&pair, cfg.tol.unwrap_or(prcheck::TOL_SOLVER))
                }
                None => {
                    let default_tol = match b.role {
                        Role::Orth | Role::Frame => prcheck::TOL_EXACT,
                        _ => prcheck::TOL_SOLVER,
                    };
                    let tol = cfg.tol.unwrap_or(default_tol);
                    let m = if *mode == VerifyMode::Basis {
                        Mode::Basis
                    } else {
                        Mode::Frame
                    };
                    vec![
                        prcheck::identity_summation(&b, tol),
                        prcheck::shift_cancellation(&b, m, tol),
                    ]
                }
            };
            Ok(if print_reports(out, &reports) { 0 } else { EXIT_VERIFY })
        }
        Command::Transform {
            image,
            bank,
            dual,
            levels,
            mode,
            inverse,
            roundtrip,
            random,
        } => {
            let ana = read_bank(bank)?;
            let syn = match dual {
                Some(d) => read_bank(d)?,
                None => ana.clone(),
            };
            if ana.grid != syn.grid {
                return Err(input_err(Error::GridMismatch(ana.grid.n(), syn.grid.n())));
            }
            let levels = levels.unwrap_or(cfg.levels);
            let mode = if *mode == ModeArg::Critical {
                TransformMode::Critical
            } else {
                TransformMode::Frame
            };
            if *inverse {
                let src = image
                    .as_ref()
                    .ok_or_else(|| input_err("--inverse needs a pyramid file"))?;
                let pyr = io::read_pyramid(src).map_err(input_err)?;
                let x = transform::synthesize(&pyr, &syn).map_err(input_err)?;
                let img = GrayImage {
                    width: pyr.side,
                    height: pyr.side,
                    data: x.iter().map(|z| z.re).collect(),
                };
                let path = out_path("reconstruction.pgm");
                io::write_image(&path, &img).map_err(input_err)?;
                let _ = writeln!(out, "wrote {}", path.display());
                return Ok(0);
            }
            let img = match (random, image) {
                (Some(side), _) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    GrayImage {
                        width: *side,
                        height: *side,
                        data: (0..side * side).map(|_| rng.gen()).collect(),
                    }
                }
                (None, Some(p)) => io::read_image(p).map_err(input_err)?,
                (None, None) => return Err(input_err("an image file or --random SIDE is required")),
            };
            if img.width != img.height {
                return Err(input_err(format!("image is {}x{}, not square", img.width, img.height)));
            }
            let x: Vec<C64> = img.data.iter().map(|&v| C64::new(v, 0.0)).collect();
            let pyr = transform::analyze(&x, img.width, &ana, levels, mode).map_err(input_err)?;
            let px = img.width * img.width;
            let _ = writeln!(
                out,
                "coefficients {} pixels {} redundancy {:.6} count-check {}",
                pyr.count(),
                px,
                pyr.count() as f64 / px as f64,
                if pyr.count_matches_mode() { "PASS" } else { "FAIL" }
            );
            if *roundtrip {
                let y = transform::synthesize(&pyr, &syn).map_err(input_err)?;
                let e = transform::relative_error(&y, &x);
                let _ = writeln!(out, "roundtrip relative-error {e:.3e}");
                if let Some(t) = cfg.tol {
                    if e > t {
                        return Ok(EXIT_VERIFY);
                    }
                }
                return Ok(0);
            }
            let path = out_path("pyramid.qpy");
            io::write_pyramid(&path, &pyr).map_err(input_err)?;
            let _ = writeln!(out, "wrote {}", path.display());
            Ok(0)
        }
        Command::Atoms { bank, k, r } => {
            let b = read_bank(bank)?;
            let depth = k.unwrap_or(cfg.k);
            let refine = r.unwrap_or(cfg.r);
            let dir = out_path("atoms");
            std::fs::create_dir_all(&dir).map_err(input_err)?;
            let phi = transform::scaling_spectrum(&b.m[0], depth, refine).map_err(input_err)?;
            let atoms = transform::wavelet_spectra(&b, &phi).map_err(input_err)?;
            let side = phi.side();
            for a in &atoms {
                let s = transform::spatial_atom(a);
                let spec: Vec<f64> = a.spectrum.iter().map(|z| z.norm()).collect();
                let spat: Vec<f64> = s.samples.iter().map(|z| z.norm()).collect();
                let w = |name: String, d: &[f64]| {
                    std::fs::write(dir.join(name), io::encode_pgm(side, side, &io::to_u8_normalized(d)))
                        .map_err(input_err)
                };
                w(format!("atom{}_spectrum.pgm", a.label), &spec)?;
                w(format!("atom{}_spatial.pgm", a.label), &spat)?;
                let _ = writeln!(
                    out,
                    "atom {} decay-radius {:.4}",
                    a.label,
                    s.decay_radius / refine as f64
                );
            }
            let mut prev: Option<Vec<C64>> = None;
            for kk in 1..=depth {
                let cur = transform::scaling_spectrum(&b.m[0], kk, refine)
                    .map_err(input_err)?
                    .spectrum;
                if let Some(p) = &prev {
                    let den: f64 = cur.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                    let num: f64 = cur.iter().zip(p).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
                    let _ = writeln!(
                        out,
                        "k-sweep {kk} rel-change {:.3e}",
                        if den > 0.0 { num / den } else { 0.0 }
                    );
                }
                prev = Some(cur);
            }
            let _ = writeln!(out, "wrote {}", dir.display());
            Ok(0)
        }
        Command::Oracle1d => {
            let (m0, mt0) = solver::spline_pair_1d(cfg.n);
            let (_, rep) = solver::oracle_1d(&m0, Some(&mt0)).map_err(input_err)?;
            for l in rep.lines("oracle-1d") {
                let _ = writeln!(out, "{l}");
            }
            let ok = rep.residual <= 1e-10 && rep.truth_residual.unwrap_or(0.0) <= 1e-12;
            Ok(if ok { 0 } else { EXIT_VERIFY })
        }
        Command::Oracle2d { lambda } => {
            let lam = lambda.unwrap_or(cfg.lambda);
            if !(lam >= 0.0 && lam.is_finite()) {
                return Err(input_err("lambda must be non-negative"));
            }
            let (_, rep) = solver::oracle_2d_tensor(cfg.n, lam).map_err(input_err)?;
            let _ = writeln!(out, "oracle-2d lambda {lam}");
            for l in rep.lines("oracle-2d") {
                let _ = writeln!(out, "{l}");
            }
            Ok(if rep.residual <= 1e-10 { 0 } else { EXIT_VERIFY })
        }
    }
}
