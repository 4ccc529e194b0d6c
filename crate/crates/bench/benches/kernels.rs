use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use scramble_core::circuit::evolve_front;
use scramble_core::hp::{yk_decode_probabilistic, HpInstance};
use scramble_core::mpo::{squared_commutator_field, TebdConfig};
use scramble_core::otoc::{
    compute_otoc, krylov_evolve, Boundary, IsingCouplings, OtocMethod, OtocRequest, SpinChainHamiltonian,
};
use scramble_core::quantum::{haar_unitary_from_seed, random_state, seeded_rng};
use scramble_core::{haar_unitary, Pauli, PauliString};
use std::hint::black_box;

fn ising(n: usize) -> SpinChainHamiltonian {
    SpinChainHamiltonian::mixed_field_ising(n, IsingCouplings::default(), Boundary::Open).unwrap()
}

fn haar(c: &mut Criterion) {
    let mut g = c.benchmark_group("haar_unitary");
    for d in [16usize, 64, 256] {
        g.bench_with_input(BenchmarkId::from_parameter(d), &d, |b, &d| {
            let mut rng = seeded_rng(1);
            b.iter(|| haar_unitary(d, &mut rng))
        });
    }
    g.finish();
}

fn krylov(c: &mut Criterion) {
    let mut g = c.benchmark_group("krylov_evolve_t1");
    g.sample_size(10);
    for n in [10usize, 14] {
        let h = ising(n);
        let psi = random_state(2, n, &mut seeded_rng(2)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| krylov_evolve(&h, black_box(psi.amplitudes()), 1.0, 30).unwrap())
        });
    }
    g.finish();
}

fn ed_otoc(c: &mut Criterion) {
    let n = 8;
    let h = ising(n);
    let req = OtocRequest::new(
        PauliString::single(n, 0, Pauli::Z),
        (0..n).map(|r| PauliString::single(n, r, Pauli::Z)).collect(),
        vec![0.0, 1.0, 2.0, 4.0],
        OtocMethod::Ed,
    );
    c.bench_function("ed_otoc_n8", |b| b.iter(|| compute_otoc(&h, &req).unwrap()));
}

fn tebd(c: &mut Criterion) {
    let mut g = c.benchmark_group("tebd_mpo_t1");
    g.sample_size(10);
    for chi in [8usize, 16, 32] {
        let n = 24;
        let h = ising(n);
        let w = PauliString::single(n, n / 2, Pauli::Z);
        let cfg = TebdConfig { dt: 0.02, ..TebdConfig::with_chi(chi) };
        g.bench_with_input(BenchmarkId::from_parameter(chi), &chi, |b, _| {
            b.iter(|| squared_commutator_field(&w, &h, &[0.0, 1.0], cfg, Some(Pauli::Z)).unwrap())
        });
    }
    g.finish();
}

fn circuits(c: &mut Criterion) {
    c.bench_function("circuit_front_400x300", |b| b.iter(|| evolve_front(400, 2, 300).unwrap()));
}

fn decoder(c: &mut Criterion) {
    let inst = HpInstance::with_last(6, 2, haar_unitary_from_seed(64, 3)).unwrap();
    c.bench_function("yk_decode_n6", |b| b.iter(|| yk_decode_probabilistic(black_box(&inst)).unwrap()));
}

criterion_group!(benches, haar, krylov, ed_otoc, tebd, circuits, decoder);
criterion_main!(benches);
