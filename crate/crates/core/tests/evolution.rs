use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use qtm::corpus::{random_initial_state, random_machine, CorpusParams};
use qtm::evolution::{evolve, project_halt};
use qtm::fixtures;
use qtm::{StateVector, Tape};

#[test]
fn bundled_unitary_machines_preserve_norm() {
    for (name, spec) in fixtures::well_formed() {
        let psi = StateVector::basis(spec.start_configuration(Tape::default()));
        for n in 0..10 {
            let out = evolve(&spec, &psi, n).unwrap();
            assert!((out.norm_sq() - 1.0).abs() < 1e-12, "{name} step {n}");
        }
    }
}

#[test]
fn two_phase_is_fully_halted_after_two_steps() {
    let spec = fixtures::load("two_phase").unwrap().unwrap();
    let psi = StateVector::basis(spec.start_configuration(Tape::default()));
    let one = evolve(&spec, &psi, 1).unwrap();
    assert!((project_halt(&one, true).norm_sq() - 0.5).abs() < 1e-12);
    let two = evolve(&spec, &psi, 2).unwrap();
    assert!(project_halt(&two, false).norm_sq() < 1e-24);
    let labels: Vec<_> = two.configurations().map(|c| c.tape_label().unwrap()).collect();
    assert!(labels.contains(&fixtures::two_phase_early_output()));
    assert!(labels.contains(&fixtures::two_phase_late_output()));
}

#[test]
fn random_machines_preserve_norm_from_random_states() {
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    for _ in 0..10 {
        let spec = random_machine(CorpusParams::default(), &mut rng).unwrap();
        let psi = random_initial_state(&spec, &mut rng);
        let out = evolve(&spec, &psi, 8).unwrap();
        assert!((out.norm_sq() - 1.0).abs() < 1e-10);
    }
}
