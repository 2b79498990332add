use collinear::amplitudes::evaluate_wavefunction;
use collinear::oracle::{propagate, GridSpec};
use collinear::oscillator::{solve_eta, solve_xi, ForceShape, FrequencyProfile, Omega2Shape};
use collinear::special::oscillator_states;
use collinear::Complex64;

const SHAPE: Omega2Shape = Omega2Shape::Tanh { omega_in: 1.0, omega_out: 2.0, width: 0.3, center: 0.0 };
const FORCE: ForceShape = ForceShape::Gaussian { amplitude: 0.8, width: 0.6, center: 0.5 };

#[test]
fn reduces_to_in_channel_state_at_the_start() {
    let p = FrequencyProfile::analytic(SHAPE, FORCE, None, 2001).unwrap().with_e_kin(0.7);
    let s = solve_xi(&p, 1e-11).unwrap();
    let d = solve_eta(&p, &s).unwrap();
    let z: Vec<f64> = (-400..=400).map(|i| i as f64 * 0.02).collect();
    let t0 = p.tau_in();
    for n in 0..=2 {
        let st = evaluate_wavefunction(&p, &s, Some(&d), n, t0, &z).unwrap();
        let phase = Complex64::from_polar(1.0, 0.7 * t0);
        let phi = &oscillator_states(n, 1.0, &z)[n];
        let worst = st.values.iter().zip(phi).map(|(v, f)| (v - phase * f).norm()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "n={n}: {worst}");
    }
}

#[test]
fn stays_normalised_and_tracks_the_propagated_state() {
    let full = FrequencyProfile::analytic(SHAPE, FORCE, None, 2001).unwrap();
    let s = solve_xi(&full, 1e-11).unwrap();
    let d = solve_eta(&full, &s).unwrap();
    let grid = GridSpec::default_for(&full);
    let z = grid.nodes();
    for &n in &[0usize, 1, 3] {
        for &tau in &[-0.5, 0.3, 1.0] {
            let upto = FrequencyProfile::analytic(SHAPE, FORCE, Some((full.tau_in(), tau)), 2001).unwrap();
            let wf = propagate(&upto, n, &grid, 5e-4).unwrap();
            let st = evaluate_wavefunction(&full, &s, Some(&d), n, tau, &z).unwrap();
            assert!((st.norm() - 1.0).abs() < 1e-6);
            let ov: Complex64 =
                st.values.iter().zip(&wf.values).map(|(a, b)| a.conj() * b).sum::<Complex64>() * grid.dz();
            // the regularised vibrational phase leaves out −E_v (τ − τ_in)
            let expected = Complex64::from_polar(1.0, -(n as f64 + 0.5) * (tau - full.tau_in()));
            assert!((ov - expected).norm() < 1e-5, "n={n} tau={tau}: {ov}");
        }
    }
}

#[test]
fn static_ground_state_keeps_its_density() {
    let p = FrequencyProfile::analytic(Omega2Shape::Constant { omega: 1.5 }, ForceShape::Zero, Some((-4.0, 4.0)), 401)
        .unwrap();
    let s = solve_xi(&p, 1e-11).unwrap();
    let z: Vec<f64> = (-300..=300).map(|i| i as f64 * 0.02).collect();
    let phi = &oscillator_states(0, 1.5, &z)[0];
    for &tau in &[-2.0, 0.7, 3.9] {
        let st = evaluate_wavefunction(&p, &s, None, 0, tau, &z).unwrap();
        for (v, f) in st.values.iter().zip(phi) {
            assert!((v.norm_sqr() - f * f).abs() < 1e-9);
        }
    }
}
