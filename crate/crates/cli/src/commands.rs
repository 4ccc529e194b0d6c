use crate::output::{num, read_field, Run, Table};
use crate::Failure;
use clap::{Args, Subcommand, ValueEnum};
use scramble_core::analysis::contour_analysis;
use scramble_core::circuit::{butterfly_velocity, evolve_front_from, front_diffusion};
use scramble_core::fermion::{airy_tail_fit, freefermion_otoc, QuadraticMajorana, TAIL_LEVELS};
use scramble_core::hp::{haar_decode_draws, HaarDecodeStats};
use scramble_core::info::{
    haar_mutual_info_mc, haar_renyi_mutual_closed_form, pure_mutual_info_finite, ReferenceSetup, StateKind,
};
use scramble_core::mpo::{squared_commutator_field, time_split_squared_commutator, TebdConfig, TrotterOrder};
use scramble_core::otoc::{
    compute_otoc, lieb_robinson_certificate, Boundary, IsingCouplings, OtocMethod, OtocRequest,
    SpinChainHamiltonian,
};
use scramble_core::phenom::{fit_growth_form, fkpp_integrate, fkpp_lyapunov, fkpp_velocity, FkppConfig, TailWindow};
use scramble_core::quantum::EntropyOrder;
use scramble_core::{Pauli, PauliString, SpaceTimeField};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::time::Instant;

pub struct Context {
    pub out_dir: PathBuf,
    pub name: Option<String>,
    pub seed: u64,
}

impl Context {
    fn run(&self, command: &'static str) -> Run {
        Run::new(command, &self.out_dir, self.name.as_deref(), self.seed)
    }
}

type Outcome = Result<Value, Failure>;

#[derive(Subcommand, Debug)]
pub enum Command {
    /// OTOC field of a spin chain by exact diagonalization
    OtocEd(ChainArgs),
    /// OTOC field by Krylov propagation (typical states or operators)
    OtocKrylov(KrylovArgs),
    /// Squared-commutator field by TEBD evolution of a matrix product operator
    OtocMpo(MpoArgs),
    /// Haar brickwork front: drift and diffusion of the operator endpoint
    CircuitFront(FrontArgs),
    /// Yoshida-Kitaev probabilistic decoder over Haar scramblers
    HpDecode(DecodeArgs),
    /// Haar-averaged mutual information between the reference and the first l qubits
    MutualInfo(MutualInfoArgs),
    /// Free-fermion squared commutator and its Airy tail exponent
    Freefermion(FermionArgs),
    /// Fit the growth form to a field CSV written by another subcommand
    PhenomFit(FitArgs),
    /// Noiseless FKPP front: speed and tail growth rate
    Fkpp(FkppArgs),
    /// Exact commutator norms against the Lieb-Robinson bound
    LrCheck(LrArgs),
    /// Wall-clock timings of the main kernels at small sizes
    Bench(BenchArgs),
}

pub fn run(ctx: &Context, cmd: Command) -> Outcome {
    match cmd {
        Command::OtocEd(a) => otoc_ed(ctx, a),
        Command::OtocKrylov(a) => otoc_krylov(ctx, a),
        Command::OtocMpo(a) => otoc_mpo(ctx, a),
        Command::CircuitFront(a) => circuit_front(ctx, a),
        Command::HpDecode(a) => hp_decode(ctx, a),
        Command::MutualInfo(a) => mutual_info(ctx, a),
        Command::Freefermion(a) => freefermion(ctx, a),
        Command::PhenomFit(a) => phenom_fit(ctx, a),
        Command::Fkpp(a) => fkpp(ctx, a),
        Command::LrCheck(a) => lr_check(ctx, a),
        Command::Bench(a) => bench(ctx, a),
    }
}

fn parse_pauli(s: &str) -> Result<Pauli, String> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c != 'I' && c != 'i' => Pauli::from_char(c.to_ascii_uppercase()).map_err(|e| e.to_string()),
        _ => Err(format!("expected one of X, Y, Z, got {s:?}")),
    }
}

/// Mixed-field Ising chain, initial operator and time grid.
#[derive(Args, Debug, Clone, Serialize)]
pub struct ChainArgs {
    /// Number of sites
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub j: f64,
    #[arg(long, default_value_t = 1.05)]
    pub hx: f64,
    #[arg(long, default_value_t = 0.5)]
    pub hz: f64,
    #[arg(long)]
    pub periodic: bool,
    /// Pauli of the initial operator W
    #[arg(long, default_value = "Z", value_parser = parse_pauli)]
    #[serde(serialize_with = "ser_pauli")]
    pub w: Pauli,
    /// Site of W
    #[arg(long, default_value_t = 0)]
    pub w_site: usize,
    /// Pauli of the probe V placed on every site
    #[arg(long, default_value = "Z", value_parser = parse_pauli)]
    #[serde(serialize_with = "ser_pauli")]
    pub probe: Pauli,
    #[arg(long, default_value_t = 10.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 0.5)]
    pub t_step: f64,
}

fn ser_pauli<S: serde::Serializer>(p: &Pauli, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{p:?}"))
}

impl ChainArgs {
    fn hamiltonian(&self) -> Result<SpinChainHamiltonian, Failure> {
        let c = IsingCouplings { j: self.j, hx: self.hx, hz: self.hz };
        let b = if self.periodic { Boundary::Periodic } else { Boundary::Open };
        Ok(SpinChainHamiltonian::mixed_field_ising(self.n, c, b)?)
    }

    fn times(&self) -> Result<Vec<f64>, Failure> {
        time_grid(0.0, self.t_max, self.t_step)
    }

    fn w_operator(&self) -> Result<PauliString, Failure> {
        if self.w_site >= self.n {
            return Err(Failure::config(format!("--w-site {} is outside a {}-site chain", self.w_site, self.n)));
        }
        Ok(PauliString::single(self.n, self.w_site, self.w))
    }

    fn probes(&self) -> Vec<PauliString> {
        (0..self.n).map(|r| PauliString::single(self.n, r, self.probe)).collect()
    }
}

fn time_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(step > 0.0 && end >= start && start >= 0.0 && end.is_finite()) {
        return Err(Failure::config("times need 0 <= start <= end and a positive step"));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

fn field_results(c: &SpaceTimeField) -> Value {
    json!({ "sites": c.num_sites(), "times": c.num_times(), "max_value": c.values.iter().cloned().fold(0.0, f64::max) })
}

const FIELD_UNITS: &str = "site index, time in units of 1/J, squared commutator C(r,t) (dimensionless)";

fn otoc_ed(ctx: &Context, a: ChainArgs) -> Outcome {
    let run = ctx.run("otoc-ed");
    let h = a.hamiltonian()?;
    let req = OtocRequest::new(a.w_operator()?, a.probes(), a.times()?, OtocMethod::Ed);
    let res = compute_otoc(&h, &req)?;
    let mut results = field_results(&res.squared_commutator);
    results["max_imag"] = json!(res.max_imag);
    Ok(run.finish(&a, "ed", FIELD_UNITS, &Table::from_field(&res.squared_commutator), results)?)
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct KrylovArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    /// Propagate operators instead of typical states
    #[arg(long)]
    pub operator: bool,
    /// Number of random states averaged
    #[arg(long, default_value_t = 1)]
    pub states: usize,
    #[arg(long, default_value_t = 30)]
    pub krylov_dim: usize,
}

fn otoc_krylov(ctx: &Context, a: KrylovArgs) -> Outcome {
    let run = ctx.run("otoc-krylov");
    let h = a.chain.hamiltonian()?;
    let method = if a.operator { OtocMethod::KrylovOperator } else { OtocMethod::KrylovState };
    let mut req = OtocRequest::new(a.chain.w_operator()?, a.chain.probes(), a.chain.times()?, method);
    req.num_states = a.states;
    req.krylov_dim = a.krylov_dim;
    req.seed = ctx.seed;
    let res = compute_otoc(&h, &req)?;
    let name = if a.operator { "krylov-operator" } else { "krylov-state" };
    let mut results = field_results(&res.squared_commutator);
    results["max_imag"] = json!(res.max_imag);
    Ok(run.finish(&a, name, FIELD_UNITS, &Table::from_field(&res.squared_commutator), results)?)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
pub enum OrderArg {
    First,
    Second,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MpoArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
    #[arg(long, default_value_t = 32)]
    pub chi: usize,
    /// Trotter step
    #[arg(long, default_value_t = 0.005)]
    pub dt: f64,
    #[arg(long, value_enum, default_value_t = OrderArg::Second)]
    pub order: OrderArg,
    /// Average the probe over X, Y and Z instead of using --probe
    #[arg(long)]
    pub averaged: bool,
    /// Also rerun with dt/2 and report the largest change of C
    #[arg(long)]
    pub convergence: bool,
    /// Sites evaluated with the time-split method at the final time
    #[arg(long, value_delimiter = ',')]
    pub split_sites: Vec<usize>,
}

fn otoc_mpo(ctx: &Context, a: MpoArgs) -> Outcome {
    let run = ctx.run("otoc-mpo");
    let h = a.chain.hamiltonian()?;
    let w = a.chain.w_operator()?;
    let times = a.chain.times()?;
    let order = match a.order {
        OrderArg::First => TrotterOrder::First,
        OrderArg::Second => TrotterOrder::Second,
    };
    let cfg = TebdConfig { dt: a.dt, order, ..TebdConfig::with_chi(a.chi) };
    let probe = (!a.averaged).then_some(a.chain.probe);
    let res = squared_commutator_field(&w, &h, &times, cfg, probe)?;
    let mut results = field_results(&res.field);
    results["discarded_weight"] = json!(res.discarded);
    results["max_bond"] = json!(res.max_bond);
    if a.convergence {
        let half = squared_commutator_field(&w, &h, &times, TebdConfig { dt: a.dt / 2.0, ..cfg }, probe)?;
        results["dt_halving_max_change"] = json!(res.field.max_abs_diff(&half.field)?);
    }
    if !a.split_sites.is_empty() {
        let t = *times.last().unwrap_or(&0.0);
        let split = time_split_squared_commutator(&w, &a.split_sites, probe, &h, t, cfg)?;
        results["time_split"] = json!({ "time": t, "points": split });
    }
    Ok(run.finish(&a, "tebd-mpo", FIELD_UNITS, &Table::from_field(&res.field), results)?)
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FrontArgs {
    /// Local dimension
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value_t = 400)]
    pub sites: usize,
    #[arg(long, default_value_t = 300)]
    pub layers: usize,
    /// Initial endpoint of the operator
    #[arg(long, default_value_t = 0)]
    pub seed_site: usize,
}

fn circuit_front(ctx: &Context, a: FrontArgs) -> Outcome {
    let run = ctx.run("circuit-front");
    let ev = evolve_front_from(a.sites, a.q, a.layers, a.seed_site)?;
    let mut t = Table::new(&["layer", "mean_endpoint", "variance"]);
    for (k, (m, v)) in ev.mean.iter().zip(&ev.variance).enumerate() {
        t.push(vec![k.to_string(), num(*m), num(*v)]);
    }
    let results = json!({
        "v_B": ev.fit.v_b,
        "D": ev.fit.diffusion,
        "fit": ev.fit,
        "v_B_exact": butterfly_velocity(a.q),
        "D_exact": front_diffusion(a.q),
        "truncated": ev.truncated,
    });
    Ok(run.finish(&a, "endpoint-walk", "layer index, endpoint position in sites, variance in sites^2", &t, results)?)
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DecodeArgs {
    /// Scrambler qubits
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    /// Qubits Bob collects (the last |E| system qubits)
    #[arg(long, default_value_t = 1)]
    pub e: usize,
    /// Number of Haar draws
    #[arg(long, default_value_t = 100)]
    pub seeds: usize,
}

fn hp_decode(ctx: &Context, a: DecodeArgs) -> Outcome {
    let run = ctx.run("hp-decode");
    let draws = haar_decode_draws(a.n, a.e, a.seeds, ctx.seed)?;
    let stats = HaarDecodeStats::from_draws(a.e, &draws);
    let mut t = Table::new(&["draw", "delta", "f_epr", "renyi_mutual_info"]);
    for (k, d) in draws.iter().enumerate() {
        t.push(vec![k.to_string(), num(d.delta), num(d.f_epr), num(d.renyi_mutual_info)]);
    }
    let results = json!({ "f_epr": stats.f_epr_mean, "stats": stats });
    Ok(run.finish(&a, "yoshida-kitaev", "probabilities and fidelities (dimensionless), mutual information in bits", &t, results)?)
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
pub enum SetupArg {
    Pure,
    Mixed,
    MaximallyMixed,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MutualInfoArgs {
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Rényi order: 1 (von Neumann) or 2
    #[arg(long, default_value_t = 2)]
    pub order: u32,
    #[arg(long, value_enum, default_value_t = SetupArg::Pure)]
    pub setup: SetupArg,
    /// Purified system qubits for --setup mixed
    #[arg(long, default_value_t = 1)]
    pub purified: usize,
}

fn mutual_info(ctx: &Context, a: MutualInfoArgs) -> Outcome {
    let run = ctx.run("mutual-info");
    let order = EntropyOrder::from_alpha(a.order)?;
    let kind = match a.setup {
        SetupArg::Pure => StateKind::Pure,
        SetupArg::Mixed => StateKind::Mixed(a.purified),
        SetupArg::MaximallyMixed => StateKind::MaximallyMixed,
    };
    let setup = ReferenceSetup::new(a.n, kind)?;
    let regions: Vec<_> = (0..=a.n).map(|l| setup.first_system(l)).collect();
    let mc = haar_mutual_info_mc(&setup, &regions, a.samples, ctx.seed, order)?;
    let mut t = Table::new(&["l", "mean", "stderr", "closed_form", "finite_n"]);
    for l in 0..=a.n {
        let closed = haar_renyi_mutual_closed_form(a.n, l, kind)?;
        let finite = match kind {
            StateKind::Pure => num(pure_mutual_info_finite(a.n, l)?),
            _ => String::new(),
        };
        t.push(vec![l.to_string(), num(mc.mean[l]), num(mc.stderr[l]), num(closed), finite]);
    }
    let results = json!({ "samples": mc.samples, "mean": mc.mean, "stderr": mc.stderr });
    Ok(run.finish(&a, "haar-monte-carlo", "l = region size in qubits, mutual information in bits", &t, results)?)
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FermionArgs {
    #[arg(long, default_value_t = 1024)]
    pub ring: usize,
    #[arg(long, default_value_t = 300)]
    pub max_distance: usize,
    #[arg(long, default_value_t = 10.0)]
    pub t_min: f64,
    #[arg(long, default_value_t = 100.0)]
    pub t_max: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_step: f64,
}

fn freefermion(ctx: &Context, a: FermionArgs) -> Outcome {
    let run = ctx.run("freefermion");
    let m = QuadraticMajorana::nearest_neighbor(a.ring)?;
    let times = time_grid(a.t_min, a.t_max, a.t_step)?;
    let field = freefermion_otoc(&m, a.max_distance, &times)?;
    let fit = airy_tail_fit(&field, a.t_min, a.t_max)?;
    let results = json!({
        "gap_slope": fit.gap_slope,
        "gap_slope_stderr": fit.gap_slope_stderr,
        "p": fit.broadening_p,
        "v_B": fit.v_b,
        "levels": TAIL_LEVELS,
    });
    Ok(run.finish(&a, "free-fermion", FIELD_UNITS, &Table::from_field(&field), results)?)
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FitArgs {
    /// Field CSV with columns site,time,value
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub c_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub c_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t_min: f64,
    /// Contour levels for the gap-slope analysis
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-4, 1e-6])]
    pub levels: Vec<f64>,
}

fn phenom_fit(ctx: &Context, a: FitArgs) -> Outcome {
    let run = ctx.run("phenom-fit");
    let field = read_field(&a.input).map_err(Failure::config)?;
    let window = TailWindow { c_min: a.c_min, c_max: a.c_max, t_min: a.t_min };
    let fit = fit_growth_form(&field, window)?;
    let t_max = field.times.last().copied().unwrap_or(0.0);
    let contours = contour_analysis(&field, &a.levels, a.t_min.max(f64::MIN_POSITIVE), t_max).ok();
    let mut t = Table::new(&["parameter", "value", "stderr"]);
    for (name, v, e) in [
        ("lambda", fit.form.lambda, fit.stderr[0]),
        ("v_B", fit.form.v_b, fit.stderr[1]),
        ("p", fit.form.p, fit.stderr[2]),
    ] {
        t.push(vec![name.to_string(), num(v), num(e)]);
    }
    let results = json!({
        "fit": fit,
        "gap_slope": contours.as_ref().map(|c| c.gap_slope),
        "p_from_gap": contours.as_ref().map(|c| c.p_from_gap),
    });
    Ok(run.finish(&a, "growth-form-nls", "lambda in 1/time, v_B in sites/time, p dimensionless", &t, results)?)
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct FkppArgs {
    /// Inter/intra coupling ratio
    #[arg(long, default_value_t = 1.0)]
    pub g: f64,
    #[arg(long, default_value_t = 40.0)]
    pub t_total: f64,
    /// Grid spacing; the step is a fifth of the stability limit
    #[arg(long, default_value_t = 0.05)]
    pub dr: f64,
}

fn fkpp(ctx: &Context, a: FkppArgs) -> Outcome {
    let run = ctx.run("fkpp");
    let mut cfg = FkppConfig::new(a.g, a.t_total);
    cfg.dr = a.dr;
    cfg.dt = 0.2 * a.dr * a.dr / (3.0 * a.g * a.g);
    let res = fkpp_integrate(&cfg, a.t_total)?;
    let mut t = Table::new(&["time", "front"]);
    for (time, x) in &res.front {
        t.push(vec![num(*time), num(*x)]);
    }
    let results = json!({
        "v_front": res.velocity.slope,
        "v_front_stderr": res.velocity.slope_stderr,
        "lambda_tail": res.lambda_tail,
        "lambda_tail_stderr": res.lambda_tail_stderr,
        "tail_probe": res.tail_probe,
        "v_B_formula": fkpp_velocity(a.g),
        "lambda_formula": fkpp_lyapunov(a.g),
        "config": cfg,
    });
    Ok(run.finish(&a, "fkpp-explicit", "time, position of the phi = 1 crossing", &t, results)?)
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LrArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub chain: ChainArgs,
}

fn lr_check(ctx: &Context, a: LrArgs) -> Outcome {
    let run = ctx.run("lr-check");
    let h = a.chain.hamiltonian()?;
    let w = a.chain.w_operator()?;
    let probes: Vec<_> = a.chain.probes().into_iter().filter(|p| !p.support().contains(&a.chain.w_site)).collect();
    let cert = lieb_robinson_certificate(&h, &w, &probes, &a.chain.times()?)?;
    let mut t = Table::new(&["time", "distance", "exact", "bound", "in_regime"]);
    let e = std::f64::consts::E;
    for p in &cert.points {
        let inside = p.distance as f64 > 4.0 * e * cert.coupling * p.t;
        t.push(vec![num(p.t), p.distance.to_string(), num(p.exact), num(p.bound), inside.to_string()]);
    }
    let results = json!({ "coupling": cert.coupling, "in_regime": cert.in_regime, "violations": cert.violations });
    Ok(run.finish(&a, "ed-commutator-norm", "time in 1/J, distance in sites, operator norms", &t, results)?)
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BenchArgs {
    /// Repetitions per kernel; the fastest is reported
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
}

fn bench(ctx: &Context, a: BenchArgs) -> Outcome {
    let run = ctx.run("bench");
    let repeats = a.repeats.max(1);
    let chain = |n: usize| SpinChainHamiltonian::mixed_field_ising(n, IsingCouplings::default(), Boundary::Open);
    let mut kernels: Vec<(&str, Box<dyn Fn() -> scramble_core::Result<()>>)> = Vec::new();
    kernels.push(("ed_otoc_n8", Box::new(move || {
        let n = 8;
        let w = PauliString::single(n, 0, Pauli::Z);
        let req = OtocRequest::new(w, vec![PauliString::single(n, 4, Pauli::Z)], vec![0.0, 1.0, 2.0], OtocMethod::Ed);
        compute_otoc(&chain(n)?, &req).map(|_| ())
    })));
    kernels.push(("krylov_state_n12", Box::new(move || {
        let n = 12;
        let w = PauliString::single(n, 0, Pauli::Z);
        let req = OtocRequest::new(w, vec![PauliString::single(n, 6, Pauli::Z)], vec![0.0, 2.0], OtocMethod::KrylovState);
        compute_otoc(&chain(n)?, &req).map(|_| ())
    })));
    kernels.push(("tebd_mpo_n20_t2", Box::new(move || {
        let n = 20;
        let w = PauliString::single(n, 10, Pauli::Z);
        squared_commutator_field(&w, &chain(n)?, &[0.0, 2.0], TebdConfig { dt: 0.02, ..TebdConfig::default() }, None).map(|_| ())
    })));
    kernels.push(("circuit_front_400x300", Box::new(|| evolve_front_from(400, 2, 300, 0).map(|_| ()))));
    kernels.push(("haar_decode_n6", Box::new(|| haar_decode_draws(6, 1, 4, 0).map(|_| ()))));
    let mut t = Table::new(&["kernel", "seconds"]);
    let mut results = serde_json::Map::new();
    for (name, f) in &kernels {
        let mut best = f64::INFINITY;
        for _ in 0..repeats {
            let start = Instant::now();
            f()?;
            best = best.min(start.elapsed().as_secs_f64());
        }
        t.push(vec![name.to_string(), num(best)]);
        results.insert(name.to_string(), json!(best));
    }
    Ok(run.finish(&a, "wall-clock", "seconds (fastest of the repeats)", &t, Value::Object(results))?)
}
