//! Randomized invariants for the transport, interference, and field layers.
//!
//! Each property states a structural fact that must hold for every valid
//! input, not just the worked examples: phase closure at reported maxima,
//! whole-turn gauge shifts leaving densities unchanged, exact negation under
//! path inversion, composition of transport over path unions, self-adjointness
//! of the flux-form Laplacian, and exactness of the closed-form moments.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use weylq::evolution::laplace_beltrami;
use weylq::field::{Grid, WaveField};
use weylq::geometry::ChartMetric;
use weylq::interference::{
    density_pattern, fringe_positions, fringe_positions_small_angle, path_length_difference,
    LengthMode, ScatterProbe, TwoPathSetup,
};
use weylq::paths_action::{
    action, discrete_line_integral, GaugePotential, LagrangianKind, LagrangianSpec, Path,
};
use weylq::propagator::moments_closed_form;
use weylq::weyl_gauge::{continuing_union, physical_check, wrap_phase, WeylTransport};
use weylq::Error;

/// Random slit geometry with gauge values and flux assigned after
/// construction, exactly as a caller configuring a run would do.
fn setup_strategy() -> impl Strategy<Value = TwoPathSetup> {
    (
        0.3..2.0f64,
        60.0..300.0f64,
        4.0..18.0f64,
        -3.0..3.0f64,
        -3.0..3.0f64,
        -3.0..3.0f64,
    )
        .prop_map(|(d_s, d_o, p, sigma_i, sigma_f, flux_term)| {
            let mut setup = TwoPathSetup::new(d_s, d_o, p).expect("positive geometry");
            setup.sigma_i = sigma_i;
            setup.sigma_f = sigma_f;
            setup.flux_term = flux_term;
            setup
        })
}

/// Random 2-d polyline with strictly increasing parameters.
fn polyline() -> impl Strategy<Value = Path> {
    (3usize..8).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2), n),
            prop::collection::vec(0.05..0.8f64, n),
        )
            .prop_map(|(nodes, increments)| {
                let mut tau = 0.0;
                let params = increments
                    .iter()
                    .map(|dt| {
                        tau += dt;
                        tau
                    })
                    .collect();
                Path::new(nodes, params).expect("strictly increasing params")
            })
    })
}

fn smooth_potential() -> GaugePotential {
    GaugePotential::from_fn(|x: &[f64]| {
        vec![(x[0] + x[1]).sin() + 0.3 * x[0], x[0].cos() - 0.2 * x[1] * x[1]]
    })
}

/// Ring field whose node values come from a supplied table.
fn ring_field(amp: f64, values: &[(f64, f64)]) -> WaveField {
    let n = values.len();
    let spacing = TAU / n as f64;
    let grid = Grid::ring(0.0, spacing, n).expect("ring grid");
    let metric = Arc::new(ChartMetric::named(&format!("sine-ring:{amp}")).expect("ring metric"));
    let table: Vec<Complex64> = values.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    WaveField::from_fn(grid, metric, move |x| {
        table[(x[0] / spacing).round() as usize % n]
    })
    .expect("field on ring")
}

fn inner(weights: &[f64], u: &[Complex64], v: &[Complex64]) -> Complex64 {
    weights
        .iter()
        .zip(u.iter().zip(v))
        .map(|(&w, (a, b))| w * a.conj() * b)
        .sum()
}

proptest! {
    /// Every reported exact maximum closes the transported phase onto a whole
    /// number of turns, and onto the fringe index it was reported under.
    #[test]
    fn exact_fringe_maxima_close_the_transported_phase(setup in setup_strategy()) {
        let maxima = fringe_positions(&setup, -5..=5).expect("valid setup");
        for (n, x_hat) in maxima {
            let phase = setup.p * path_length_difference(&setup, x_hat, LengthMode::Exact)
                + (setup.sigma_i - setup.sigma_f)
                + setup.flux_term;
            prop_assert!(
                wrap_phase(phase).abs() <= 1e-7,
                "phase residual {} at n = {n}, x = {x_hat}",
                wrap_phase(phase)
            );
            prop_assert_eq!((phase / TAU).round() as i64, n);
        }
    }

    /// Small-angle maxima are uniformly spaced by the fringe spacing and close
    /// the small-angle phase.
    #[test]
    fn small_angle_maxima_are_uniformly_spaced(setup in setup_strategy()) {
        let maxima = fringe_positions_small_angle(&setup, -5..=5);
        let spacing = setup.fringe_spacing();
        for pair in maxima.windows(2) {
            let (n1, x1) = pair[0];
            let (n2, x2) = pair[1];
            let expected = (n2 - n1) as f64 * spacing;
            prop_assert!(
                ((x2 - x1) - expected).abs() <= 1e-9 * expected.abs(),
                "gap {} between n = {n1} and n = {n2}, expected {expected}",
                x2 - x1
            );
        }
        for (n, x_hat) in maxima {
            let phase = setup.p * path_length_difference(&setup, x_hat, LengthMode::SmallAngle)
                + (setup.sigma_i - setup.sigma_f)
                + setup.flux_term;
            prop_assert!((wrap_phase(phase)).abs() <= 1e-7 * (1.0 + n.abs() as f64));
        }
    }

    /// Adding a whole turn to either the assigned gauge or the enclosed flux
    /// leaves the screen density pointwise unchanged.
    #[test]
    fn density_is_invariant_under_whole_turn_shifts(setup in setup_strategy()) {
        let mut setup = setup;
        setup.screen.samples = 193;
        let base = density_pattern(&setup, &ScatterProbe::none()).expect("pattern");

        let mut sigma_shift = setup.clone();
        sigma_shift.sigma_i += TAU;
        let shifted = density_pattern(&sigma_shift, &ScatterProbe::none()).expect("pattern");
        for (a, b) in base.density.iter().zip(&shifted.density) {
            prop_assert!((a - b).abs() <= 1e-11);
        }

        let mut flux_shift = setup.clone();
        flux_shift.flux_term += TAU;
        let shifted = density_pattern(&flux_shift, &ScatterProbe::none()).expect("pattern");
        for (a, b) in base.density.iter().zip(&shifted.density) {
            prop_assert!((a - b).abs() <= 1e-11);
        }
    }

    /// Without a probe the pattern keeps unit visibility and no which-path
    /// flag; any probe keeps the visibility inside [0, 1] and the density
    /// inside [0, 2].
    #[test]
    fn probe_visibility_stays_in_bounds(setup in setup_strategy(), p_ph in 0.1..40.0f64) {
        let mut setup = setup;
        setup.screen.samples = 97;
        let clean = density_pattern(&setup, &ScatterProbe::none()).expect("pattern");
        prop_assert_eq!(clean.visibility, 1.0);
        prop_assert!(!clean.which_path);

        let probed = density_pattern(&setup, &ScatterProbe::new(p_ph).expect("positive p_ph"))
            .expect("pattern");
        prop_assert!((0.0..=1.0).contains(&probed.visibility));
        for d in &probed.density {
            prop_assert!((-1e-12..=2.0 + 1e-12).contains(d));
        }
    }

    /// Traversing a path backwards negates both the discrete line integral
    /// and the discrete action, segment by segment.
    #[test]
    fn inversion_negates_integrals_and_actions(path in polyline(), m in 0.5..3.0f64) {
        let potential = smooth_potential();
        let forward = discrete_line_integral(&potential, &path).expect("line integral");
        let backward = discrete_line_integral(&potential, &path.inverted()).expect("line integral");
        prop_assert!((forward + backward).abs() <= 1e-12 * (1.0 + forward.abs()));

        let lag = LagrangianSpec::new(
            LagrangianKind::InhomogeneousMassive { m },
            ChartMetric::named("sphere:2").expect("metric"),
        )
        .expect("spec");
        let s_forward = action(&path, &lag).expect("action");
        let s_backward = action(&path.inverted(), &lag).expect("action");
        prop_assert!((s_forward + s_backward).abs() <= 1e-12 * (1.0 + s_forward.abs()));
    }

    /// Transport along a continuing union equals transport along the pieces
    /// in sequence, and a junction gap is rejected by name.
    #[test]
    fn union_transport_composes(
        p1 in polyline(),
        p2 in polyline(),
        a_re in -1.0..1.0f64,
        a_im in -1.0..1.0f64,
    ) {
        let mut p2 = p2;
        let tail = p1.nodes.last().expect("nonempty").clone();
        let head = p2.nodes[0].clone();
        for node in &mut p2.nodes {
            for k in 0..node.len() {
                node[k] += tail[k] - head[k];
            }
        }

        let transport = WeylTransport::new(Complex64::new(a_re, a_im), smooth_potential());
        let l0 = Complex64::new(0.8, -0.3);
        let union = continuing_union(&p1, &p2).expect("junction nodes agree");
        let joint = transport.transport_length(l0, &union).expect("transport");
        let staged = transport
            .transport_length(
                transport.transport_length(l0, &p1).expect("transport"),
                &p2,
            )
            .expect("transport");
        prop_assert!((joint - staged).norm() <= 1e-10 * (1.0 + joint.norm()));

        let mut gapped = p2.clone();
        gapped.nodes[0][0] += 1.0;
        match continuing_union(&p1, &gapped) {
            Err(Error::NonContinuing { gap }) => prop_assert!(gap >= 0.9),
            other => prop_assert!(false, "expected a junction-gap error, got {other:?}"),
        }
    }

    /// The closed-phase verdict is exactly the wrapped residual of
    /// `S - sigma(y) + sigma(x)`, with the winding count rounded from it.
    #[test]
    fn phase_verdict_matches_the_wrapped_residual(
        total_action in -40.0..40.0f64,
        sigma_x in -6.0..6.0f64,
        sigma_y in -6.0..6.0f64,
        tol in 0.01..1.0f64,
    ) {
        let phi = total_action - sigma_y + sigma_x;
        let verdict = physical_check(total_action, sigma_x, sigma_y, tol).expect("valid tol");
        prop_assert_eq!(verdict.residual, wrap_phase(phi));
        prop_assert_eq!(verdict.is_physical, verdict.residual.abs() < tol);
        prop_assert_eq!(verdict.n, (phi / TAU).round() as i64);

        let wrapped = wrap_phase(phi);
        prop_assert!(wrapped > -PI && wrapped <= PI);
        // The unwrapped part is a whole number of turns.
        let turns = (phi - wrapped) / TAU;
        prop_assert!((turns - turns.round()).abs() <= 1e-9);
        // Periodicity, away from the branch cut at half a turn.
        if (wrapped.abs() - PI).abs() > 1e-9 {
            prop_assert!((wrap_phase(phi + TAU) - wrapped).abs() <= 1e-12);
        }
    }

    /// The flux-form Laplacian is self-adjoint in the measure-weighted inner
    /// product on a periodic ring, and annihilates constants exactly.
    #[test]
    fn flux_form_laplacian_is_self_adjoint_on_rings(
        amp in 0.0..0.35f64,
        u_vals in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 48),
        v_vals in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 48),
    ) {
        let u = ring_field(amp, &u_vals);
        let v = ring_field(amp, &v_vals);
        let weights = u.measure_weights().expect("measure");
        let u_raw: Vec<Complex64> =
            u_vals.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let v_raw: Vec<Complex64> =
            v_vals.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let lu = laplace_beltrami(&u).expect("laplacian");
        let lv = laplace_beltrami(&v).expect("laplacian");

        let left = inner(&weights, &u_raw, &lv);
        let right = inner(&weights, &lu, &v_raw);
        let scale = left.norm().max(right.norm()).max(1.0);
        prop_assert!((left - right).norm() <= 1e-10 * scale);

        let ones = vec![(1.0, 0.0); u_vals.len()];
        let constant = ring_field(amp, &ones);
        for z in laplace_beltrami(&constant).expect("laplacian") {
            prop_assert_eq!(z, Complex64::new(0.0, 0.0));
        }
    }

    /// Reassigning the gauge multiplies the field by a unimodular factor and
    /// leaves the chart-invariant density unchanged.
    #[test]
    fn born_density_is_gauge_invariant(
        vals in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64),
        c1 in -3.0..3.0f64,
        c2 in -3.0..3.0f64,
        c3 in -3.0..3.0f64,
    ) {
        let mut field = ring_field(0.2, &vals);
        let before = field.born_density().expect("density");
        field.apply_gauge(move |x: &[f64]| c1 * x[0].sin() + c2 * (2.0 * x[0]).cos() + c3);
        let after = field.born_density().expect("density");
        for (a, b) in before.iter().zip(&after) {
            prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()));
        }
    }

    /// Closed-form moments for any positive metric value: unit zeroth moment
    /// and vanishing first moments exactly, second moments proportional to
    /// the inverse metric.
    #[test]
    fn closed_form_moments_for_random_spd_metrics(
        entries in prop::collection::vec(-1.5..1.5f64, 4),
        m in 0.5..3.0f64,
        eta in 0.01..0.5f64,
    ) {
        let factor = DMatrix::from_row_slice(2, 2, &entries);
        let g = factor.transpose() * &factor + DMatrix::identity(2, 2) * 0.3;
        let set = moments_closed_form(&g, m, eta).expect("spd metric");

        prop_assert_eq!(set.q, Complex64::new(1.0, 0.0));
        for z in set.q_vec.iter() {
            prop_assert_eq!(*z, Complex64::new(0.0, 0.0));
        }
        for i in 0..2 {
            for j in 0..2 {
                let diff = set.q_mat[(i, j)] - set.q_mat[(j, i)];
                prop_assert!(diff.norm() <= 1e-12 * (1.0 + set.q_mat[(i, j)].norm()));
            }
        }
        // 2c Q g = I recovers the identity from the inverse-metric law.
        let c = Complex64::new(eta, -m);
        let g_complex = g.map(|x| Complex64::new(x, 0.0));
        let product = set.q_mat.clone() * g_complex * (2.0 * c);
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((product[(i, j)] - Complex64::new(expect, 0.0)).norm() <= 1e-8);
            }
        }
    }

    /// CSV serialization of a path is lossless: shortest-roundtrip floats
    /// reparse to the exact same nodes and parameters.
    #[test]
    fn path_csv_roundtrip_is_exact(path in polyline()) {
        let parsed = Path::from_csv(&path.to_csv()).expect("own output parses");
        prop_assert_eq!(parsed, path);
    }
}
