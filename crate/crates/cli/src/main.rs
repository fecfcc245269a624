//! Command-line driver.
//!
//! Every command prints a key=value report with a stable field order:
//! the command name, the echoed inputs, then results. Residues are
//! decimal in [0, p^M). Exit code 0 means PASS, 1 means an identity was
//! violated, 2 means bad input, 3 means a precision failure.

mod io;

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use num_rational::{BigRational, Rational64};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nocq_core::error::{invalid, Error, ErrorKind, Result};
use nocq_core::gz::{
    euler_factors, euler_factors_formulations, gz_assemble, gz_disassemble, lvalue_numerator,
    span_slope_projection, span_u_matrix, TripleWeights,
};
use nocq_core::padic::{Context, PadicNum};
use nocq_core::qseries::{deplete, theta_pow};
use nocq_core::selftest;
use nocq_core::slope::{
    fredholm_det, newton_slopes, slope_projector, verify_pairing_lemma, PairingStatus,
};
use nocq_core::sympow::{lemma_lhs, lemma_rhs, pr_project, primitive_depleted};
use nocq_core::wmodel::{nabla_pow, oc_project, oc_project_parts, WElement};

use io::{read_eigendata, read_series, same_context, write_series, EigenFile, SeriesFile};

#[derive(Parser)]
#[command(name = "nocq", version, about = "q-expansion calculus driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Remove every coefficient with index divisible by p.
    Deplete(DepleteArgs),
    /// Apply the p-adic power θ^σ to a depleted series.
    ThetaPow(ThetaPowArgs),
    /// Apply ∇^σ, producing one file per filtration slot.
    NablaPow(NablaPowArgs),
    /// Project a filtered element to its overconvergent representative.
    OcProject(OcProjectArgs),
    /// Expand a depleted series into its degree-r primitive.
    Primitive(PrimitiveArgs),
    /// Contract two symmetric-power elements along t-1 pairing slots.
    PrProject(PrProjectArgs),
    /// Compare the two numerator pipelines coefficient by coefficient.
    LemmaCheck(LemmaCheckArgs),
    /// Slope-split a U-stable span, or exercise a synthetic operator.
    SlopeDecompose(SlopeDecomposeArgs),
    /// Check the adjoint-pairing congruence on a seeded synthetic system.
    PairingLemma(PairingLemmaArgs),
    /// Print both formulations of the three Euler factors.
    EulerFactors(EulerFactorsArgs),
    /// Run the balanced L-value numerator pipeline.
    Lvalue(LvalueArgs),
    /// Scale an Abel-Jacobi input by the Euler-factor prefactor.
    GzAssemble(GzAssembleArgs),
    /// Run every module's property suite on a fixed seed.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct DepleteArgs {
    /// Input q-series file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output q-series file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ThetaPowArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Integer part of the exponent σ.
    #[arg(long, allow_hyphen_values = true)]
    s_int: i64,
    /// Wild part of σ as a residue in p·Z_p (default 0).
    #[arg(long)]
    s_wild: Option<String>,
}

#[derive(Args)]
struct NablaPowArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Output prefix; slot i is written to <out>.s<i>.qx.
    #[arg(long)]
    out: PathBuf,
    /// Weight of the input form; defaults to the file's weight header.
    #[arg(long, allow_hyphen_values = true)]
    weight: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    s_int: i64,
    #[arg(long)]
    s_wild: Option<String>,
}

#[derive(Args)]
struct OcProjectArgs {
    /// Slot files in ascending filtration order; repeat the flag.
    #[arg(long = "in", required = true)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Weight of the element; defaults to the first slot's header.
    #[arg(long, allow_hyphen_values = true)]
    weight: Option<i64>,
}

#[derive(Args)]
struct PrimitiveArgs {
    /// Depleted input series.
    #[arg(long = "in")]
    input: PathBuf,
    /// Symmetric degree of the primitive.
    #[arg(long)]
    r2: usize,
    /// Output prefix; slot i is written to <out>.s<i>.qx.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PrProjectArgs {
    /// Slot files of the left element; repeat the flag.
    #[arg(long = "a", required = true)]
    a: Vec<PathBuf>,
    /// Slot files of the right element; repeat the flag.
    #[arg(long = "b", required = true)]
    b: Vec<PathBuf>,
    /// Symmetric degree of the left element (default: its weight header).
    #[arg(long)]
    a_weight: Option<i64>,
    /// Symmetric degree of the right element (default: its weight header).
    #[arg(long)]
    b_weight: Option<i64>,
    /// Number of contracted slots plus one; t = 1 is plain multiplication.
    #[arg(long)]
    t: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct LemmaCheckArgs {
    /// q-series of g; depleted on read.
    #[arg(long)]
    g: PathBuf,
    /// q-series of h.
    #[arg(long)]
    h: PathBuf,
    #[arg(long)]
    y: i64,
    #[arg(long)]
    z: i64,
    #[arg(long)]
    t: i64,
    /// Comparison precision M' ≤ M (default: full common precision).
    #[arg(long)]
    cmp_prec: Option<u32>,
}

#[derive(Args)]
struct SlopeDecomposeArgs {
    /// Series to project (span mode).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// U-closed spanning set; repeat the flag (span mode).
    #[arg(long)]
    span: Vec<PathBuf>,
    /// Slope bound a, e.g. 0 or 1/2.
    #[arg(long)]
    slope: String,
    /// Output for the projected series (span mode).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Synthetic mode: prime, precision, and sample seed.
    #[arg(long, default_value_t = 5)]
    p: u64,
    #[arg(long, default_value_t = 8)]
    prec: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PairingLemmaArgs {
    #[arg(long, default_value_t = 5)]
    p: u64,
    #[arg(long, default_value_t = 8)]
    prec: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dimension of the synthetic system.
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Number of random test vectors.
    #[arg(long, default_value_t = 4)]
    vectors: usize,
    /// Comparison precision (default: M - 2).
    #[arg(long)]
    cmp_prec: Option<u32>,
}

#[derive(Args)]
struct EulerFactorsArgs {
    /// Eigen data files; weights are read from their k fields.
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[arg(long)]
    h: PathBuf,
}

#[derive(Args)]
struct LvalueArgs {
    /// Eigen data with coefficient files attached.
    #[arg(long)]
    g: PathBuf,
    #[arg(long)]
    h: PathBuf,
    /// Weight of the third (balancing) form.
    #[arg(long)]
    x: i64,
    /// Output for the numerator series.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GzAssembleArgs {
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[arg(long)]
    h: PathBuf,
    /// Abel-Jacobi input as a rational, e.g. 26/5.
    #[arg(long, allow_hyphen_values = true)]
    aj: String,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 17)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Precision => 3,
                ErrorKind::Consistency => 1,
            };
            ExitCode::from(code)
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Deplete(a) => cmd_deplete(a),
        Command::ThetaPow(a) => cmd_theta_pow(a),
        Command::NablaPow(a) => cmd_nabla_pow(a),
        Command::OcProject(a) => cmd_oc_project(a),
        Command::Primitive(a) => cmd_primitive(a),
        Command::PrProject(a) => cmd_pr_project(a),
        Command::LemmaCheck(a) => cmd_lemma_check(a),
        Command::SlopeDecompose(a) => cmd_slope_decompose(a),
        Command::PairingLemma(a) => cmd_pairing_lemma(a),
        Command::EulerFactors(a) => cmd_euler_factors(a),
        Command::Lvalue(a) => cmd_lvalue(a),
        Command::GzAssemble(a) => cmd_gz_assemble(a),
        Command::Selftest(a) => cmd_selftest(a),
    }
}

fn kv(key: &str, value: impl Display) {
    println!("{key}={value}");
}

fn echo_context(ctx: &Context) {
    kv("p", ctx.p());
    kv("M", ctx.prec());
    kv("Q", ctx.qprec());
}

fn parse_wild(ctx: &Context, s: &Option<String>) -> Result<PadicNum> {
    match s {
        None => Ok(ctx.zero()),
        Some(text) => io::parse_residue(ctx, text).map_err(invalid),
    }
}

fn parse_rational64(s: &str) -> Result<Rational64> {
    Rational64::from_str(s).map_err(|_| invalid(format!("invalid rational: {s:?}")))
}

/// Slot files <prefix>.s<i>.qx, each tagged with the element weight when
/// it is classical.
fn write_slots(prefix: &Path, w: &WElement) -> Result<Vec<PathBuf>> {
    let ctx = w.ctx().clone();
    let tag = w
        .weight()
        .is_classical(&ctx)
        .then_some(w.weight().int_part);
    let mut paths = Vec::with_capacity(w.fil() + 1);
    for i in 0..=w.fil() {
        let path = PathBuf::from(format!("{}.s{i}.qx", prefix.display()));
        write_series(&path, &ctx, w.comp(i), tag)?;
        paths.push(path);
    }
    Ok(paths)
}

fn report_slots(paths: &[PathBuf]) {
    for (i, path) in paths.iter().enumerate() {
        kv(&format!("out.{i}"), path.display());
    }
}

/// Read slot files into a classical-weight element. The weight comes from
/// the override or the first slot's header.
fn read_element(paths: &[PathBuf], weight: Option<i64>) -> Result<(Context, WElement)> {
    let mut comps = Vec::with_capacity(paths.len());
    let mut first: Option<SeriesFile> = None;
    for path in paths {
        let sf = read_series(path)?;
        if let Some(f) = &first {
            same_context(&f.ctx, &sf.ctx)?;
        }
        comps.push(sf.series.clone());
        if first.is_none() {
            first = Some(sf);
        }
    }
    let first = first.ok_or_else(|| invalid("no slot files given"))?;
    let k = weight
        .or(first.weight)
        .ok_or_else(|| invalid("no weight: pass --weight or a weight= header"))?;
    let ctx = first.ctx;
    let elt = WElement::new(ctx.classical_char(k), comps)?;
    Ok((ctx, elt))
}

fn cmd_deplete(a: DepleteArgs) -> Result<u8> {
    let sf = read_series(&a.input)?;
    kv("command", "deplete");
    kv("in", a.input.display());
    echo_context(&sf.ctx);
    let out = deplete(&sf.series);
    write_series(&a.out, &sf.ctx, &out, sf.weight)?;
    kv("out", a.out.display());
    Ok(0)
}

fn cmd_theta_pow(a: ThetaPowArgs) -> Result<u8> {
    let sf = read_series(&a.input)?;
    let wild = parse_wild(&sf.ctx, &a.s_wild)?;
    kv("command", "theta-pow");
    kv("in", a.input.display());
    echo_context(&sf.ctx);
    kv("s_int", a.s_int);
    kv("s_wild", sf.ctx.lift(&wild));
    let sigma = sf.ctx.exponent_char(a.s_int, wild)?;
    let out = theta_pow(&sf.series, &sigma)?;
    write_series(&a.out, &sf.ctx, &out, None)?;
    kv("out", a.out.display());
    Ok(0)
}

fn cmd_nabla_pow(a: NablaPowArgs) -> Result<u8> {
    let sf = read_series(&a.input)?;
    let k = a
        .weight
        .or(sf.weight)
        .ok_or_else(|| invalid("no weight: pass --weight or a weight= header"))?;
    let wild = parse_wild(&sf.ctx, &a.s_wild)?;
    kv("command", "nabla-pow");
    kv("in", a.input.display());
    echo_context(&sf.ctx);
    kv("weight", k);
    kv("s_int", a.s_int);
    kv("s_wild", sf.ctx.lift(&wild));
    let sigma = sf.ctx.exponent_char(a.s_int, wild)?;
    let w = WElement::from_form(sf.series.clone(), sf.ctx.classical_char(k));
    let out = nabla_pow(&w, &sigma)?;
    kv("fil", out.fil());
    let paths = write_slots(&a.out, &out)?;
    report_slots(&paths);
    Ok(0)
}

fn cmd_oc_project(a: OcProjectArgs) -> Result<u8> {
    let (ctx, elt) = read_element(&a.input, a.weight)?;
    kv("command", "oc-project");
    for (i, path) in a.input.iter().enumerate() {
        kv(&format!("in.{i}"), path.display());
    }
    echo_context(&ctx);
    kv("weight", elt.weight().int_part);
    kv("fil", elt.fil());
    let (_, den) = oc_project_parts(&elt)?;
    kv("den", ctx.lift(&den));
    let out = oc_project(&elt)?;
    write_series(&a.out, &ctx, &out, Some(elt.weight().int_part))?;
    kv("out", a.out.display());
    Ok(0)
}

fn cmd_primitive(a: PrimitiveArgs) -> Result<u8> {
    let sf = read_series(&a.input)?;
    kv("command", "primitive");
    kv("in", a.input.display());
    echo_context(&sf.ctx);
    kv("r2", a.r2);
    let out = primitive_depleted(&sf.series, a.r2)?;
    kv("fil", out.fil());
    let paths = write_slots(&a.out, &out)?;
    report_slots(&paths);
    Ok(0)
}

fn cmd_pr_project(a: PrProjectArgs) -> Result<u8> {
    let (ctx_a, elt_a) = read_element(&a.a, a.a_weight)?;
    let (ctx_b, elt_b) = read_element(&a.b, a.b_weight)?;
    same_context(&ctx_a, &ctx_b)?;
    kv("command", "pr-project");
    for (i, path) in a.a.iter().enumerate() {
        kv(&format!("a.{i}"), path.display());
    }
    for (i, path) in a.b.iter().enumerate() {
        kv(&format!("b.{i}"), path.display());
    }
    echo_context(&ctx_a);
    kv("a_weight", elt_a.weight().int_part);
    kv("b_weight", elt_b.weight().int_part);
    kv("t", a.t);
    let out = pr_project(&elt_a, &elt_b, a.t)?;
    kv("weight", out.weight().int_part);
    kv("twist", out.twist());
    kv("fil", out.fil());
    let paths = write_slots(&a.out, &out)?;
    report_slots(&paths);
    Ok(0)
}

fn cmd_lemma_check(a: LemmaCheckArgs) -> Result<u8> {
    let gf = read_series(&a.g)?;
    let hf = read_series(&a.h)?;
    same_context(&gf.ctx, &hf.ctx)?;
    let ctx = gf.ctx;
    kv("command", "lemma-check");
    kv("g", a.g.display());
    kv("h", a.h.display());
    echo_context(&ctx);
    kv("y", a.y);
    kv("z", a.z);
    kv("t", a.t);
    let g_dep = deplete(&gf.series);
    let lhs = lemma_lhs(&g_dep, &hf.series, a.y, a.z, a.t)?;
    let rhs = lemma_rhs(&g_dep, &hf.series, a.y, a.z, a.t)?;
    let avail = lhs.min_prec().min(rhs.min_prec());
    let k = a.cmp_prec.unwrap_or(avail);
    kv("cmp_prec", k);
    match lhs.first_difference(&rhs, k)? {
        None => {
            kv("status", "PASS");
            Ok(0)
        }
        Some(n) => {
            kv("status", "FAIL");
            kv("first_difference", n);
            Ok(1)
        }
    }
}

fn fmt_slopes(slopes: &[(Rational64, usize)]) -> String {
    if slopes.is_empty() {
        return "none".to_string();
    }
    slopes
        .iter()
        .map(|(r, m)| format!("{r}:{m}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_slope_decompose(a: SlopeDecomposeArgs) -> Result<u8> {
    let bound = parse_rational64(&a.slope)?;
    if !a.span.is_empty() {
        let input = a
            .input
            .ok_or_else(|| invalid("span mode needs --in"))?;
        let out = a.out.ok_or_else(|| invalid("span mode needs --out"))?;
        let omega = read_series(&input)?;
        let mut span = Vec::with_capacity(a.span.len());
        for path in &a.span {
            let sf = read_series(path)?;
            same_context(&omega.ctx, &sf.ctx)?;
            span.push(sf.series);
        }
        kv("command", "slope-decompose");
        kv("mode", "span");
        kv("in", input.display());
        for (i, path) in a.span.iter().enumerate() {
            kv(&format!("span.{i}"), path.display());
        }
        echo_context(&omega.ctx);
        kv("slope", bound);
        let u = span_u_matrix(&span)?;
        let slopes = newton_slopes(&fredholm_det(&u))?;
        kv("slopes", fmt_slopes(&slopes));
        let projected = span_slope_projection(&omega.series, &span, bound)?;
        write_series(&out, &omega.ctx, &projected, omega.weight)?;
        kv("out", out.display());
        return Ok(0);
    }

    // Synthetic mode: a seeded operator with a known slope menu.
    let ctx = Context::new(a.p, a.prec, 8)?;
    let r = Rational64::new;
    let menus: [&[Option<Rational64>]; 4] = [
        &[Some(r(0, 1)), Some(r(1, 2)), Some(r(2, 1))],
        &[Some(r(0, 1)), Some(r(1, 1)), None],
        &[Some(r(1, 2)), Some(r(1, 1))],
        &[Some(r(0, 1)), Some(r(0, 1)), Some(r(2, 1)), None],
    ];
    let specs = menus[(a.seed % menus.len() as u64) as usize];
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let sample = selftest::rand_slope_sample(&ctx, &mut rng, specs)?;
    kv("command", "slope-decompose");
    kv("mode", "synthetic");
    kv("p", ctx.p());
    kv("M", ctx.prec());
    kv("seed", a.seed);
    kv("dim", sample.u.dim());
    kv("slope", bound);
    kv("constructed", fmt_slopes(&sample.finite_slopes));
    let got = newton_slopes(&fredholm_det(&sample.u))?;
    kv("computed", fmt_slopes(&got));
    let newton_ok = got == sample.finite_slopes;

    let e = slope_projector(&sample.u, bound)?;
    let k = e.min_prec();
    let idempotent = e.mul(&e).congruent_mod(&e, k.min(e.mul(&e).min_prec()))?;
    let eu = e.mul(&sample.u);
    let ue = sample.u.mul(&e);
    let commutes = eu.congruent_mod(&ue, eu.min_prec().min(ue.min_prec()))?;
    let count: usize = sample
        .finite_slopes
        .iter()
        .filter(|(s, _)| *s <= bound)
        .map(|(_, m)| m)
        .sum();
    let trace = e.trace();
    let trace_ok = ctx.congruent_mod(&trace, &ctx.from_i64(count as i64), trace.prec())?;
    let mut kernel_ok = true;
    for col in &sample.kernel_cols {
        let v: Vec<PadicNum> = (0..sample.u.dim())
            .map(|i| *sample.conjugator.get(i, *col))
            .collect();
        let image = e.mul_vec(&v);
        if image.iter().any(|c| ctx.val_lb(c) < k) {
            kernel_ok = false;
        }
    }
    kv("rank", count);
    kv("newton_match", flag(newton_ok));
    kv("idempotent", flag(idempotent));
    kv("commutes_with_u", flag(commutes));
    kv("trace_matches_rank", flag(trace_ok));
    kv("kills_kernel", flag(kernel_ok));
    let pass = newton_ok && idempotent && commutes && trace_ok && kernel_ok;
    kv("status", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { 0 } else { 1 })
}

fn flag(ok: bool) -> &'static str {
    if ok {
        "OK"
    } else {
        "MISMATCH"
    }
}

fn cmd_pairing_lemma(a: PairingLemmaArgs) -> Result<u8> {
    let ctx = Context::new(a.p, a.prec, 8)?;
    let cmp_prec = a.cmp_prec.unwrap_or(ctx.prec().saturating_sub(2));
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let sample = selftest::rand_pairing_sample(&ctx, &mut rng, a.dim, a.vectors)?;
    kv("command", "pairing-lemma");
    kv("p", ctx.p());
    kv("M", ctx.prec());
    kv("seed", a.seed);
    kv("dim", a.dim);
    kv("vectors", a.vectors);
    kv("cmp_prec", cmp_prec);
    let report = verify_pairing_lemma(
        &sample.u,
        &sample.big_phi,
        &sample.small_phi,
        &sample.eta,
        Rational64::from_integer(0),
        &sample.vectors,
        cmp_prec,
    )?;
    kv("alpha", ctx.lift(&report.alpha));
    kv("alpha_val", report.alpha_val);
    kv("worst_discrepancy_val", report.worst_discrepancy_val);
    let status = match report.status {
        PairingStatus::Pass => "PASS",
        PairingStatus::Fail => "FAIL",
        PairingStatus::NotApplicable => "NOT_APPLICABLE",
    };
    kv("status", status);
    if let Some(witness) = report.witness {
        kv("witness", witness);
    }
    Ok(if report.status == PairingStatus::Pass {
        0
    } else {
        1
    })
}

/// Eigen files for scalar commands need only agree on p and M.
fn same_scalars(a: &Context, b: &Context) -> Result<()> {
    if a.p() != b.p() || a.prec() != b.prec() {
        return Err(invalid(format!(
            "input files disagree on p or M: p={} M={} vs p={} M={}",
            a.p(),
            a.prec(),
            b.p(),
            b.prec()
        )));
    }
    Ok(())
}

fn read_triple(
    f: &Path,
    g: &Path,
    h: &Path,
) -> Result<(EigenFile, EigenFile, EigenFile, TripleWeights)> {
    let ff = read_eigendata(f)?;
    let gf = read_eigendata(g)?;
    let hf = read_eigendata(h)?;
    same_scalars(&ff.ctx, &gf.ctx)?;
    same_scalars(&ff.ctx, &hf.ctx)?;
    let w = TripleWeights::new(ff.data.weight, gf.data.weight, hf.data.weight)?;
    Ok((ff, gf, hf, w))
}

fn echo_triple(f: &Path, g: &Path, h: &Path, ctx: &Context, w: &TripleWeights) {
    kv("f", f.display());
    kv("g", g.display());
    kv("h", h.display());
    kv("p", ctx.p());
    kv("M", ctx.prec());
    kv("x", w.x);
    kv("y", w.y);
    kv("z", w.z);
    kv("t", w.t);
    kv("c", w.c);
}

fn cmd_euler_factors(a: EulerFactorsArgs) -> Result<u8> {
    let (ff, gf, hf, w) = read_triple(&a.f, &a.g, &a.h)?;
    let ctx = &ff.ctx;
    kv("command", "euler-factors");
    echo_triple(&a.f, &a.g, &a.h, ctx, &w);
    let (direct, primed) = euler_factors_formulations(ctx, &ff.data, &gf.data, &hf.data, &w)?;
    kv("e0", ctx.fmt_qp(&direct.e0));
    kv("e0_cross", ctx.fmt_qp(&primed.e0));
    kv("e1", ctx.fmt_qp(&direct.e1));
    kv("e1_cross", ctx.fmt_qp(&primed.e1));
    kv("e", ctx.fmt_qp(&direct.e));
    kv("e_cross", ctx.fmt_qp(&primed.e));
    match euler_factors(ctx, &ff.data, &gf.data, &hf.data, &w) {
        Ok(_) => {
            kv("consistent", "CONSISTENT");
            Ok(0)
        }
        Err(Error::FormulationMismatch(detail)) => {
            kv("consistent", "MISMATCH");
            kv("detail", detail);
            Ok(1)
        }
        Err(e) => Err(e),
    }
}

fn cmd_lvalue(a: LvalueArgs) -> Result<u8> {
    let gf = read_eigendata(&a.g)?;
    let hf = read_eigendata(&a.h)?;
    same_context(&gf.ctx, &hf.ctx)?;
    let ctx = &gf.ctx;
    let w = TripleWeights::new(a.x, gf.data.weight, hf.data.weight)?;
    kv("command", "lvalue");
    kv("g", a.g.display());
    kv("h", a.h.display());
    if let Some(p) = &gf.coeffs_path {
        kv("g_coeffs", p);
    }
    if let Some(p) = &hf.coeffs_path {
        kv("h_coeffs", p);
    }
    echo_context(ctx);
    kv("x", w.x);
    kv("y", w.y);
    kv("z", w.z);
    kv("t", w.t);
    let (num, den) = lvalue_numerator(&gf.data, &hf.data, &w)?;
    kv("pipelines", "CONSISTENT");
    kv("den", ctx.lift(&den));
    write_series(&a.out, ctx, &num, Some(w.x))?;
    kv("out", a.out.display());
    Ok(0)
}

fn cmd_gz_assemble(a: GzAssembleArgs) -> Result<u8> {
    let (ff, gf, hf, w) = read_triple(&a.f, &a.g, &a.h)?;
    let ctx = &ff.ctx;
    let aj = BigRational::from_str(&a.aj)
        .map_err(|_| invalid(format!("invalid rational: {:?}", a.aj)))?;
    let aj = ctx.qp_from_rational(&aj);
    kv("command", "gz-assemble");
    echo_triple(&a.f, &a.g, &a.h, ctx, &w);
    kv("aj", ctx.fmt_qp(&aj));
    let ef = euler_factors(ctx, &ff.data, &gf.data, &hf.data, &w)?;
    kv("e0", ctx.fmt_qp(&ef.e0));
    kv("e1", ctx.fmt_qp(&ef.e1));
    kv("e", ctx.fmt_qp(&ef.e));
    let l = gz_assemble(ctx, &aj, &ff.data, &gf.data, &hf.data, &w)?;
    kv("l_value", ctx.fmt_qp(&l));
    let back = gz_disassemble(ctx, &l, &ff.data, &gf.data, &hf.data, &w)?;
    let seen = |x: &nocq_core::padic::Qp| x.valuation + x.unit.prec() as i64;
    let k = seen(&aj).min(seen(&back));
    let ok = ctx.qp_congruent_mod(&aj, &back, k);
    kv("round_trip", flag(ok));
    Ok(if ok { 0 } else { 1 })
}

fn cmd_selftest(a: SelftestArgs) -> Result<u8> {
    kv("command", "selftest");
    kv("seed", a.seed);
    let results = selftest::run(a.seed);
    let mut failures = 0usize;
    for r in &results {
        if r.pass {
            println!("check={} status=PASS", r.name);
        } else {
            failures += 1;
            println!("check={} status=FAIL detail={}", r.name, r.detail);
        }
    }
    kv("checks", results.len());
    kv("failures", failures);
    kv("overall", if failures == 0 { "PASS" } else { "FAIL" });
    Ok(if failures == 0 { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_string_parses() {
        assert_eq!(parse_rational64("1/2").unwrap(), Rational64::new(1, 2));
        assert_eq!(parse_rational64("0").unwrap(), Rational64::new(0, 1));
        assert!(parse_rational64("half").is_err());
    }
}
