use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qesr_core::dynamics::{ContourSettings, SpectralMode};
use qesr_core::presets::PLUS_I;
use qesr_core::protocol::{esr_spectrum, QubitChain};
use qesr_core::units::hz_to_rad;
use qesr_core::Execution;

fn spectrum_sweep(c: &mut Criterion) {
    let d = PLUS_I.distribution(2_000).unwrap();
    let w = PLUS_I.omega_k();
    let omegas: Vec<f64> = (0..101)
        .map(|i| w + hz_to_rad(-5e6 + 1e5 * i as f64))
        .collect();
    let settings = ContourSettings::default();
    let mut group = c.benchmark_group("spectrum_sweep");
    group.sample_size(10);
    for mode in [SpectralMode::NarrowPulse, SpectralMode::Resolvent] {
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_with_input(BenchmarkId::new(format!("{mode:?}"), format!("{exec:?}")), &exec, |b, &exec| {
                b.iter(|| {
                    esr_spectrum(&d, &PLUS_I.cavity(), &PLUS_I.pulse(), &QubitChain::default(), &omegas, 90e-9, 1.0, mode, &settings, exec)
                        .unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, spectrum_sweep);
criterion_main!(benches);
