//! Command-line surface: instance generation, separability checks, the
//! covering pipeline, certificate verification, brute-force oracles, SVG
//! plots, and batch benchmarks.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use capcover::bang::SigningConfig;
use capcover::cover::{cover_caps, CoverCertificate, CoverError, CoverOptions};
use capcover::io::{
    self, certificate_from_file, instance_digest, load_certificate, load_instance,
    save_certificate, save_instance, write_atomic,
};
use capcover::oracle::{
    bang_cell_harness, grid_separability, minimal_enclosing_cap_estimate,
    sampled_cap_containment,
};
use capcover::separability::{check_nonseparable, SeparabilityStatus, SolverParams};
use capcover::sphere::{
    cap_to_zone, plank_vector, spherical_distance, zone_contains_zone, Instance, Point,
};
use capcover::{gen, svg, EPS_GEOM};

const EXIT_OK: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_SEPARABLE: u8 = 2;
const EXIT_INDETERMINATE: u8 = 3;
const EXIT_REFUSED: u8 = 4;
const EXIT_INVALID_COVER: u8 = 5;
const EXIT_BAD_INPUT: u8 = 64;

#[derive(Parser)]
#[command(
    name = "capcover",
    version,
    about = "Cover non-separable spherical cap families by one cap of summed radius, with certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Chain,
    Tree,
    Separable,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Chain overlap factor in [0,1]; 0 places consecutive caps tangent.
        #[arg(long)]
        overlap: Option<f64>,
        /// Target sum of radii (radians, below pi/2).
        #[arg(long)]
        sum_alpha: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decide separability. Exit 0 non-separable, 2 separable, 3 indeterminate.
    Check {
        file: PathBuf,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute the covering cap and write a certificate.
    /// Exit 0 valid, 4 refused (separable), 5 invalid cover.
    Cover {
        file: PathBuf,
        #[arg(long)]
        skip_check: bool,
        /// Families up to this size are signed exactly; 0 forces the
        /// heuristic everywhere.
        #[arg(long)]
        exact_threshold: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-verify a certificate against its instance. Exit 0 pass, 1 fail.
    Verify {
        cert: PathBuf,
        file: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Brute-force oracles.
    Oracle {
        #[command(subcommand)]
        which: OracleCmd,
    },
    /// Emit an orthographic SVG plot (dim = 2 instances only).
    Plot {
        file: PathBuf,
        cert: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Batch experiments; one CSV row per instance.
    Bench {
        #[arg(long, default_value = "mixed")]
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum OracleCmd {
    /// Grid scan for an avoiding separating great sphere (dim = 2).
    GridSep {
        file: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        resolution: usize,
    },
    /// Max-in-translate implication harness on random plank families.
    BangCell {
        #[arg(long, default_value_t = 1000)]
        families: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Minimal enclosing cap estimate.
    Mec {
        file: PathBuf,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn default_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("CAPCOVER_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn solver_params(restarts: Option<usize>, iters: Option<usize>, seed: u64) -> SolverParams {
    let mut p = SolverParams {
        seed,
        ..Default::default()
    };
    if let Some(r) = restarts {
        p.restarts = r;
    }
    if let Some(i) = iters {
        p.max_iters = i;
    }
    p
}

fn main() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}

fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Gen {
            kind,
            dim,
            n,
            seed,
            overlap,
            sum_alpha,
            out,
        } => cmd_gen(kind, dim, n, default_seed(seed), overlap, sum_alpha, &out),
        Command::Check {
            file,
            restarts,
            iters,
            seed,
        } => cmd_check(&file, restarts, iters, default_seed(seed)),
        Command::Cover {
            file,
            skip_check,
            exact_threshold,
            restarts,
            iters,
            seed,
            out,
        } => cmd_cover(
            &file,
            skip_check,
            exact_threshold,
            restarts,
            iters,
            default_seed(seed),
            &out,
        ),
        Command::Verify {
            cert,
            file,
            samples,
            seed,
        } => cmd_verify(&cert, &file, samples, default_seed(seed)),
        Command::Oracle { which } => match which {
            OracleCmd::GridSep { file, resolution } => cmd_grid_sep(&file, resolution),
            OracleCmd::BangCell {
                families,
                samples,
                seed,
            } => cmd_bang_cell(families, samples, default_seed(seed)),
            OracleCmd::Mec {
                file,
                iters,
                restarts,
                seed,
            } => cmd_mec(&file, iters, restarts, default_seed(seed)),
        },
        Command::Plot { file, cert, out } => cmd_plot(&file, cert.as_deref(), &out),
        Command::Bench { suite, seed, out } => cmd_bench(&suite, default_seed(seed), &out),
    }
}

fn cmd_gen(
    kind: GenKind,
    dim: usize,
    n: usize,
    seed: u64,
    overlap: Option<f64>,
    sum_alpha: Option<f64>,
    out: &Path,
) -> u8 {
    let inst = match kind {
        GenKind::Chain => gen::random_chain_with(dim, n, seed, overlap, sum_alpha),
        GenKind::Tree => gen::tree(dim, n, seed),
        GenKind::Separable => Ok(gen::separable(dim, seed)),
    };
    let inst = match inst {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    if let Err(e) = save_instance(out, &inst) {
        eprintln!("error: {e}");
        return EXIT_BAD_INPUT;
    }
    println!(
        "wrote {} ({} caps, dim {}, sum of radii {:.6})",
        out.display(),
        inst.caps.len(),
        inst.dim,
        inst.sum_radii()
    );
    EXIT_OK
}

fn cmd_check(file: &Path, restarts: Option<usize>, iters: Option<usize>, seed: u64) -> u8 {
    let inst = match load_instance(file) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let params = solver_params(restarts, iters, seed);
    match check_nonseparable(&inst, &params) {
        Ok(v) => {
            match v.best_margin {
                Some(m) => println!("verdict: {:?} (best margin {m:.3e})", v.status),
                None => println!("verdict: {:?} (no separating pattern exists)", v.status),
            }
            match v.status {
                SeparabilityStatus::NonSeparable => EXIT_OK,
                SeparabilityStatus::Separable => {
                    if let Some(w) = &v.witness_normal {
                        println!("witness normal: {:?}", w.coords());
                    }
                    if let Some(p) = &v.witness_pattern {
                        println!("witness pattern: {:?}", p.signs());
                    }
                    EXIT_SEPARABLE
                }
                SeparabilityStatus::Indeterminate => EXIT_INDETERMINATE,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BAD_INPUT
        }
    }
}

fn cmd_cover(
    file: &Path,
    skip_check: bool,
    exact_threshold: Option<usize>,
    restarts: Option<usize>,
    iters: Option<usize>,
    seed: u64,
    out: &Path,
) -> u8 {
    let inst = match load_instance(file) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let mut options = CoverOptions {
        skip_check,
        signing: SigningConfig {
            seed,
            ..Default::default()
        },
        solver: solver_params(restarts, iters, seed),
    };
    if let Some(t) = exact_threshold {
        options.signing.exact_threshold = t;
    }
    match cover_caps(&inst, &options) {
        Ok(cert) => {
            if let Err(e) = save_certificate(out, &cert, seed) {
                eprintln!("error: {e}");
                return EXIT_BAD_INPUT;
            }
            let valid = cert.is_valid();
            println!(
                "cover radius {:.12}, min slack {:.3e}, merges {}, heuristic {}, valid {}",
                cert.cover_cap.radius,
                cert.min_slack(),
                cert.merge_trace.len(),
                cert.heuristic_signing,
                valid
            );
            println!("wrote {}", out.display());
            if valid {
                EXIT_OK
            } else {
                eprintln!("cover verification failed; certificate is marked invalid");
                EXIT_INVALID_COVER
            }
        }
        Err(CoverError::Separable { verdict, .. }) => {
            eprintln!("refused: instance is separable");
            if let Some(w) = &verdict.witness_normal {
                eprintln!("witness normal: {:?}", w.coords());
            }
            if let Some(p) = &verdict.witness_pattern {
                eprintln!("witness pattern: {:?}", p.signs());
            }
            EXIT_REFUSED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BAD_INPUT
        }
    }
}

struct VerifyReport {
    failures: usize,
}

impl VerifyReport {
    fn check(&mut self, ok: bool, label: &str) {
        if ok {
            println!("ok: {label}");
        } else {
            println!("FAIL: {label}");
            self.failures += 1;
        }
    }
}

fn cmd_verify(cert_path: &Path, file: &Path, samples: usize, seed: u64) -> u8 {
    let inst = match load_instance(file) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let cert_file = match load_certificate(cert_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let mut report = VerifyReport { failures: 0 };
    let digest = instance_digest(&inst);
    report.check(
        digest == cert_file.instance_digest,
        "certificate digest matches the instance",
    );
    if digest != cert_file.instance_digest {
        println!("verification failed (1 check)");
        return EXIT_FAIL;
    }
    let cert = match certificate_from_file(cert_path, &cert_file, &inst) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    verify_certificate(&mut report, &inst, &cert, &cert_file, samples, seed);
    if report.failures == 0 {
        println!("verification passed");
        EXIT_OK
    } else {
        println!("verification failed ({} checks)", report.failures);
        EXIT_FAIL
    }
}

fn verify_certificate(
    report: &mut VerifyReport,
    inst: &Instance,
    cert: &CoverCertificate,
    cert_file: &io::CertificateFile,
    samples: usize,
    seed: u64,
) {
    let total = inst.sum_radii();
    report.check(
        (cert.cover_cap.radius - total).abs() <= 1e-12,
        "cover radius equals the sum of the radii",
    );
    // recomputed slacks agree with the stored ones
    let mut slacks_ok = cert.containment_slacks.len() == inst.caps.len();
    let mut min_slack = f64::INFINITY;
    if slacks_ok {
        for (cap, stored) in inst.caps.iter().zip(&cert.containment_slacks) {
            let s = cert.cover_cap.radius
                - spherical_distance(&cert.cover_cap.center, &cap.center).unwrap()
                - cap.radius;
            min_slack = min_slack.min(s);
            if (s - stored).abs() > 1e-9 {
                slacks_ok = false;
            }
        }
    }
    report.check(slacks_ok, "stored slacks match recomputation");
    let valid = min_slack >= -EPS_GEOM;
    report.check(
        valid == cert_file.valid,
        "stored validity flag matches the slacks",
    );
    report.check(valid, "every cap is contained analytically");

    // replay the merge trace against the dualized instance
    let mut zones: Vec<_> = inst.caps.iter().map(cap_to_zone).collect();
    let original_width: f64 = zones.iter().map(|z| z.half_width).sum();
    let mut trace_ok = true;
    for step in &cert.merge_trace {
        if step.merged_indices.len() < 2
            || step.merged_indices.iter().any(|&i| i >= zones.len())
        {
            trace_ok = false;
            break;
        }
        let member_width: f64 = step
            .merged_indices
            .iter()
            .map(|&i| zones[i].half_width)
            .sum();
        if (step.new_zone.half_width - member_width).abs() > 1e-9 {
            trace_ok = false;
            break;
        }
        for &i in &step.merged_indices {
            if !zone_contains_zone(&step.new_zone, &zones[i]).unwrap_or(false) {
                trace_ok = false;
            }
        }
        let mut next = Vec::with_capacity(zones.len() - step.merged_indices.len() + 1);
        for (i, z) in zones.iter().enumerate() {
            if i == step.merged_indices[0] {
                next.push(step.new_zone.clone());
            } else if !step.merged_indices.contains(&i) {
                next.push(z.clone());
            }
        }
        zones = next;
        let width: f64 = zones.iter().map(|z| z.half_width).sum();
        if (width - original_width).abs() > 1e-9 {
            trace_ok = false;
        }
        if !trace_ok {
            break;
        }
    }
    report.check(trace_ok, "merge trace replays with conserved width");
    report.check(
        cert.merge_trace.len() + 1 <= inst.caps.len() || cert.merge_trace.is_empty(),
        "merge count stays below the family size",
    );
    let w_norm = capcover::vecmath::norm(&cert.final_w);
    report.check(
        w_norm <= total.sin() + EPS_GEOM,
        "final signed sum is within the sine bound",
    );
    // sampling re-verification of the cover, when the certificate claims
    // validity
    if valid {
        let mut sampled_ok = true;
        for (i, cap) in inst.caps.iter().enumerate() {
            let r = sampled_cap_containment(
                &cert.cover_cap,
                cap,
                samples,
                seed.wrapping_add(i as u64),
            )
            .unwrap();
            if !r.pass {
                sampled_ok = false;
            }
        }
        report.check(sampled_ok, "sampling oracle confirms the cover");
    }
    // reproduce the stored separability verdict
    if let Some(stored) = &cert.separability {
        if inst.caps.len() <= 16 {
            let params = SolverParams {
                seed,
                ..Default::default()
            };
            match check_nonseparable(inst, &params) {
                Ok(v) => report.check(
                    v.status == stored.status,
                    "separability verdict reproduces",
                ),
                Err(_) => report.check(false, "separability verdict reproduces"),
            }
        }
    }
}

fn cmd_grid_sep(file: &Path, resolution: usize) -> u8 {
    let inst = match load_instance(file) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    match grid_separability(&inst, resolution) {
        Ok(r) => {
            println!(
                "grid separability: checked {} directions, pass {}, best margin {:.3e}",
                r.checked, r.pass, r.max_violation
            );
            if r.pass {
                EXIT_OK
            } else {
                println!("witness direction: {:?}", r.witnesses.first());
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BAD_INPUT
        }
    }
}

fn cmd_bang_cell(families: usize, samples: usize, seed: u64) -> u8 {
    match bang_cell_harness(families, samples, seed) {
        Ok(r) => {
            println!(
                "bang-cell harness: {} implications checked, violations {}, worst breach {:.3e}",
                r.checked, r.witness_count, r.max_violation
            );
            if r.pass {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BAD_INPUT
        }
    }
}

fn cmd_mec(file: &Path, iters: usize, restarts: usize, seed: u64) -> u8 {
    let inst = match load_instance(file) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let (center, radius) = minimal_enclosing_cap_estimate(&inst.caps, iters, restarts, seed);
    println!(
        "enclosing cap estimate: radius {:.9} (sum of radii {:.9}) center {:?}",
        radius,
        inst.sum_radii(),
        center.coords()
    );
    EXIT_OK
}

fn cmd_plot(file: &Path, cert_path: Option<&Path>, out: &Path) -> u8 {
    let inst = match load_instance(file) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let cert = match cert_path {
        None => None,
        Some(p) => {
            let file_cert = match load_certificate(p) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_BAD_INPUT;
                }
            };
            if file_cert.instance_digest != instance_digest(&inst) {
                eprintln!("error: certificate does not bind to this instance");
                return EXIT_BAD_INPUT;
            }
            match certificate_from_file(p, &file_cert, &inst) {
                Ok(c) => Some(c),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_BAD_INPUT;
                }
            }
        }
    };
    // witness great circle: from the stored verdict, or a quick check when
    // plotting a bare instance
    let witness: Option<Point> = match &cert {
        Some(c) => c
            .separability
            .as_ref()
            .and_then(|v| v.witness_normal.clone()),
        None if inst.caps.len() <= 12 => {
            check_nonseparable(&inst, &SolverParams::default())
                .ok()
                .and_then(|v| v.witness_normal)
        }
        None => None,
    };
    match svg::render(&inst, cert.as_ref(), witness.as_ref()) {
        Ok(text) => {
            if let Err(e) = write_atomic(out, text.as_bytes()) {
                eprintln!("error: {e}");
                return EXIT_BAD_INPUT;
            }
            println!("wrote {}", out.display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_BAD_INPUT
        }
    }
}

fn bench_instances(suite: &str, seed: u64) -> Result<Vec<Instance>, String> {
    enum Kind {
        Chain,
        Tree,
    }
    let mut plan: Vec<(Kind, usize, usize)> = Vec::new();
    match suite {
        "chains" => {
            for n in 2..=10 {
                for dim in [2, 3] {
                    plan.push((Kind::Chain, n, dim));
                }
            }
        }
        "trees" => {
            for n in 2..=10 {
                for dim in [2, 3] {
                    plan.push((Kind::Tree, n, dim));
                }
            }
        }
        "mixed" => {
            for n in 2..=8 {
                for dim in [2, 3] {
                    plan.push((Kind::Chain, n, dim));
                    plan.push((Kind::Tree, n, dim));
                }
            }
        }
        other => return Err(format!("unknown suite '{other}' (chains, trees, mixed)")),
    }
    let mut instances = Vec::with_capacity(plan.len());
    for (idx, (kind, n, dim)) in plan.into_iter().enumerate() {
        let s = seed.wrapping_mul(1000).wrapping_add(idx as u64 + 1);
        let inst = match kind {
            Kind::Chain => gen::random_chain(dim, n, s),
            Kind::Tree => gen::tree(dim, n, s),
        }
        .map_err(|e| e.to_string())?;
        instances.push(inst);
    }
    Ok(instances)
}

fn cmd_bench(suite: &str, seed: u64, out: &Path) -> u8 {
    let instances = match bench_instances(suite, seed) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_BAD_INPUT;
        }
    };
    let rows: Vec<String> = instances
        .par_iter()
        .map(|inst| {
            let start = Instant::now();
            let zones: Vec<_> = inst.caps.iter().map(cap_to_zone).collect();
            let vectors: Vec<_> = zones.iter().map(plank_vector).collect();
            let fam =
                capcover::bang::max_norm_signing(&vectors, &SigningConfig::default()).unwrap();
            let w_before = capcover::vecmath::norm(&fam.sum());
            let options = CoverOptions::default();
            match cover_caps(inst, &options) {
                Ok(cert) => {
                    let wall_ms = start.elapsed().as_secs_f64() * 1000.0;
                    let max_slack = cert
                        .containment_slacks
                        .iter()
                        .copied()
                        .fold(f64::NEG_INFINITY, f64::max);
                    format!(
                        "{},{},{:.9},{:.9},{:.9},{},{:.3e},{:.3}",
                        inst.caps.len(),
                        inst.dim,
                        inst.sum_radii(),
                        w_before,
                        capcover::vecmath::norm(&cert.final_w),
                        cert.merge_trace.len(),
                        max_slack,
                        wall_ms
                    )
                }
                Err(e) => format!(
                    "{},{},{:.9},{:.9},,,error: {e},",
                    inst.caps.len(),
                    inst.dim,
                    inst.sum_radii(),
                    w_before
                ),
            }
        })
        .collect();
    let mut csv = String::from("n,dim,sum_alpha,w_before,w_after,merge_count,max_slack,wall_ms\n");
    for row in rows {
        csv.push_str(&row);
        csv.push('\n');
    }
    if let Err(e) = write_atomic(out, csv.as_bytes()) {
        eprintln!("error: {e}");
        return EXIT_BAD_INPUT;
    }
    println!("wrote {} ({} rows)", out.display(), instances.len());
    EXIT_OK
}
