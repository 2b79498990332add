use collinear::amplitudes::{assemble_matrix, extract_parameters, ClosedForm, Normalization, ScatteringParameters};
use collinear::oracle::{default_dt, oracle_matrix, propagate, GridSpec};
use collinear::oscillator::{solve_eta, solve_xi, ForceShape, FrequencyProfile, Omega2Shape};
use collinear::special::oscillator_states;

const REL: f64 = 1e-3;
const FLOOR: f64 = 1e-12;

fn tanh(omega_out: f64, width: f64, force: ForceShape) -> FrequencyProfile {
    let shape = Omega2Shape::Tanh { omega_in: 1.0, omega_out, width, center: 0.0 };
    FrequencyProfile::analytic(shape, force, None, 2001).unwrap()
}

fn closed_form_params(p: &FrequencyProfile) -> ScatteringParameters {
    let s = solve_xi(p, 1e-11).unwrap();
    let d = solve_eta(p, &s).unwrap();
    extract_parameters(s.c1, s.c2, d.d_inf, p.omega_in, p.omega_out).unwrap()
}

#[test]
fn legendre_matrix_matches_propagation() {
    for &width in &[0.05, 0.5] {
        let p = tanh(5.0, width, ForceShape::Zero);
        let params = closed_form_params(&p);
        let oracle = oracle_matrix(&p, 10, &GridSpec::default_for(&p), default_dt(&p)).unwrap();
        let legendre = assemble_matrix(&params, 10, ClosedForm::Legendre).unwrap();
        let bad = oracle.mismatches(&legendre, 6, REL, FLOOR);
        assert!(bad.is_empty(), "theta={}: {:?}", params.theta, &bad[..bad.len().min(3)]);
    }
}

#[test]
fn theta_from_ground_state_persistence() {
    let p = tanh(2.0, 0.3, ForceShape::Zero);
    let theta = closed_form_params(&p).theta;
    let g = GridSpec::default_for(&p);
    let wf = propagate(&p, 0, &g, default_dt(&p)).unwrap();
    let ground = oscillator_states(0, 2.0, &g.nodes()).pop().unwrap();
    let p00 = wf.overlap(&ground).norm_sqr();
    let theta_oracle = 1.0 - p00 * p00;
    assert!((theta_oracle - theta).abs() / theta < 1e-4, "{theta_oracle} vs {theta}");
}

#[test]
fn driven_and_squeezed_amplitudes_match_propagation() {
    // θ > 0 and ν > 0 together, with drives placed before, at and after the switch
    for &(center, width) in &[(0.0, 0.6), (1.5, 0.5), (-2.0, 0.8)] {
        let p = tanh(2.0, 0.3, ForceShape::Gaussian { amplitude: 0.8, width, center });
        let params = closed_form_params(&p);
        assert!(params.theta > 0.05 && params.nu > 0.1);
        let oracle = oracle_matrix(&p, 10, &GridSpec::default_for(&p), default_dt(&p)).unwrap();
        let closed = assemble_matrix(&params, 10, ClosedForm::Hermite(Normalization::Factorial)).unwrap();
        let bad = closed.mismatches(&oracle, 6, REL, FLOOR);
        assert!(bad.is_empty(), "center={center}: {:?}", &bad[..bad.len().min(3)]);
    }
}

#[test]
fn literal_normalization_disagrees_with_propagation() {
    let f = ForceShape::ResonantPulse { amplitude: 0.4, omega: 1.0, width: 2.0, center: 0.0 };
    let p = FrequencyProfile::analytic(Omega2Shape::Constant { omega: 1.0 }, f, None, 2001).unwrap();
    let params = closed_form_params(&p);
    let oracle = oracle_matrix(&p, 6, &GridSpec::default_for(&p), default_dt(&p)).unwrap();
    let literal = assemble_matrix(&params, 6, ClosedForm::Hermite(Normalization::PaperLiteral)).unwrap();
    let w20 = (oracle.get(2, 0), literal.get(2, 0));
    assert!((w20.0 - w20.1).abs() > 0.1 * w20.0, "{w20:?}");
}

#[test]
fn grid_doubling_is_converged() {
    let p = tanh(2.0, 0.3, ForceShape::Gaussian { amplitude: 0.5, width: 0.5, center: 0.0 });
    let g = GridSpec::default_for(&p);
    let dt = default_dt(&p);
    let coarse = oracle_matrix(&p, 4, &g, dt).unwrap();
    let fine = oracle_matrix(&p, 4, &g.refined(), dt).unwrap();
    let (abs, _) = coarse.compare(&fine, 4);
    assert!(abs < 1e-6, "{abs}");
}
