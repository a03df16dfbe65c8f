//! Penalty families and their univariate penalized least-squares minimizers.
//!
//! All penalties are written as `p_lambda(theta) = lambda * rho_lambda(theta)`
//! on `theta >= 0`, increasing and concave with a positive slope at the
//! origin. The coordinate-descent kernel is [`Penalty::univariate_minimize`],
//! the exact global minimizer of `(theta - theta0)^2 / 2 + p_lambda(|theta|)`;
//! the weighted coordinate subproblem reduces to this unit-weight form because
//! the objective scales each penalty term by the corresponding diagonal
//! weight.

use crate::error::{Error, Result};

/// Tie margin below which an interior SICA minimum is not preferred to zero.
const SICA_TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// Lasso penalty `lambda * theta`.
    L1,
    /// Smoothly clipped absolute deviation with shape `a > 2`.
    Scad { a: f64 },
    /// Minimax concave penalty with shape `a > 1`.
    Mcp { a: f64 },
    /// Smooth homotopy between the L0 and L1 penalties,
    /// `lambda * (a + 1) * theta / (a + theta)`, shape `a > 0`.
    Sica { a: f64 },
    /// `lambda * (alpha * theta + (1 - alpha) * theta^2 / 2)`, `alpha` in (0, 1].
    ElasticNet { alpha: f64 },
}

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_A: f64 = 3.7;
pub const DEFAULT_SICA_A: f64 = 1.0;
pub const DEFAULT_SICA_A_FINAL: f64 = 0.1;
pub const DEFAULT_ENET_ALPHA: f64 = 0.5;

impl Penalty {
    pub fn l1() -> Self {
        Penalty::L1
    }

    pub fn scad(a: f64) -> Result<Self> {
        if !(a > 2.0) {
            return Err(Error::Config(format!("SCAD requires a > 2, got {a}")));
        }
        Ok(Penalty::Scad { a })
    }

    pub fn mcp(a: f64) -> Result<Self> {
        if !(a > 1.0) {
            return Err(Error::Config(format!("MCP requires a > 1, got {a}")));
        }
        Ok(Penalty::Mcp { a })
    }

    pub fn sica(a: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::Config(format!("SICA requires a > 0, got {a}")));
        }
        Ok(Penalty::Sica { a })
    }

    pub fn elastic_net(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config(format!(
                "elastic net requires alpha in (0, 1], got {alpha}"
            )));
        }
        Ok(Penalty::ElasticNet { alpha })
    }

    pub fn label(&self) -> String {
        match self {
            Penalty::L1 => "lasso".into(),
            Penalty::Scad { a } => format!("scad(a={a})"),
            Penalty::Mcp { a } => format!("mcp(a={a})"),
            Penalty::Sica { a } => format!("sica(a={a})"),
            Penalty::ElasticNet { alpha } => format!("enet(alpha={alpha})"),
        }
    }

    /// Penalty value `p_lambda(theta)` for `theta, lambda >= 0`.
    pub fn value(&self, theta: f64, lambda: f64) -> Result<f64> {
        if !(theta >= 0.0) || !(lambda >= 0.0) {
            return Err(Error::Config(format!(
                "penalty value requires theta >= 0 and lambda >= 0, got ({theta}, {lambda})"
            )));
        }
        Ok(self.value_at(theta, lambda))
    }

    pub(crate) fn value_at(&self, theta: f64, lambda: f64) -> f64 {
        match *self {
            Penalty::L1 => lambda * theta,
            Penalty::Scad { a } => {
                if theta <= lambda {
                    lambda * theta
                } else if theta <= a * lambda {
                    (2.0 * a * lambda * theta - theta * theta - lambda * lambda)
                        / (2.0 * (a - 1.0))
                } else {
                    lambda * lambda * (a + 1.0) / 2.0
                }
            }
            Penalty::Mcp { a } => {
                if theta <= a * lambda {
                    lambda * theta - theta * theta / (2.0 * a)
                } else {
                    a * lambda * lambda / 2.0
                }
            }
            Penalty::Sica { a } => lambda * (a + 1.0) * theta / (a + theta),
            Penalty::ElasticNet { alpha } => {
                lambda * (alpha * theta + (1.0 - alpha) * theta * theta / 2.0)
            }
        }
    }

    /// Derivative `p_lambda'(theta)` for `theta > 0`.
    pub fn derivative(&self, theta: f64, lambda: f64) -> Result<f64> {
        if !(theta > 0.0) {
            return Err(Error::Config(format!(
                "penalty derivative requires theta > 0, got {theta}"
            )));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!(
                "penalty derivative requires lambda >= 0, got {lambda}"
            )));
        }
        Ok(self.derivative_at(theta, lambda))
    }

    pub(crate) fn derivative_at(&self, theta: f64, lambda: f64) -> f64 {
        match *self {
            Penalty::L1 => lambda,
            Penalty::Scad { a } => {
                if theta <= lambda {
                    lambda
                } else {
                    (a * lambda - theta).max(0.0) / (a - 1.0)
                }
            }
            Penalty::Mcp { a } => (a * lambda - theta).max(0.0) / a,
            Penalty::Sica { a } => lambda * a * (a + 1.0) / ((a + theta) * (a + theta)),
            Penalty::ElasticNet { alpha } => lambda * (alpha + (1.0 - alpha) * theta),
        }
    }

    /// Maximum concavity `kappa(p_lambda)`, the largest downward slope of the
    /// penalty derivative. The coordinatewise objective stays strictly convex
    /// after diagonal weighting exactly when this is below 1.
    pub fn max_concavity(&self, lambda: f64) -> f64 {
        match *self {
            Penalty::L1 | Penalty::ElasticNet { .. } => 0.0,
            Penalty::Scad { a } => 1.0 / (a - 1.0),
            Penalty::Mcp { a } => 1.0 / a,
            Penalty::Sica { a } => 2.0 * lambda * (1.0 / a + 1.0 / (a * a)),
        }
    }

    /// Global minimizer of `(theta - theta0)^2 / 2 + p_lambda(|theta|)`.
    ///
    /// Closed forms: soft thresholding (L1), the three-regime SCAD rule, firm
    /// thresholding (MCP), scaled soft thresholding (elastic net), and the
    /// cubic-root procedure for SICA. Ties between zero and an interior SICA
    /// minimum resolve to zero.
    pub fn univariate_minimize(&self, theta0: f64, lambda: f64) -> f64 {
        debug_assert!(theta0.is_finite());
        debug_assert!(lambda >= 0.0);
        if lambda == 0.0 {
            return theta0;
        }
        let z = theta0.abs();
        let s = theta0.signum();
        match *self {
            Penalty::L1 => s * (z - lambda).max(0.0),
            Penalty::Scad { a } => {
                if z <= 2.0 * lambda {
                    s * (z - lambda).max(0.0)
                } else if z <= a * lambda {
                    s * ((a - 1.0) * z - a * lambda) / (a - 2.0)
                } else {
                    theta0
                }
            }
            Penalty::Mcp { a } => {
                if z <= a * lambda {
                    s * a * (z - lambda).max(0.0) / (a - 1.0)
                } else {
                    theta0
                }
            }
            Penalty::Sica { a } => s * sica_minimize_abs(z, a, lambda),
            Penalty::ElasticNet { alpha } => {
                s * (z - lambda * alpha).max(0.0) / (1.0 + lambda * (1.0 - alpha))
            }
        }
    }
}

/// SICA minimizer on `theta >= 0` for `z = |theta0|`, `lambda > 0`.
///
/// Nonzero stationary points solve the cubic
/// `t^3 + c2 t^2 + c1 t + c0 = 0` with
/// `c2 = 2a - z`, `c1 = a^2 - 2az`, `c0 = lambda a (a+1) - a^2 z`.
/// When the cubic has three real roots, the two largest are a local maximum
/// and a local minimum of the objective; the minimum wins over zero only when
/// its objective value is strictly lower (beyond a tie margin).
fn sica_minimize_abs(z: f64, a: f64, lambda: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let c2 = 2.0 * a - z;
    let c1 = a * a - 2.0 * a * z;
    let c0 = lambda * a * (a + 1.0) - a * a * z;

    let q = (c2 * c2 - 3.0 * c1) / 9.0;
    let r = (2.0 * c2 * c2 * c2 - 9.0 * c1 * c2 + 27.0 * c0) / 54.0;
    if q * q * q <= r * r {
        // single real root (negative) or inflection: zero is the minimizer
        return 0.0;
    }
    let sqrt_q = q.sqrt();
    let alpha = (r / (q * sqrt_q)).clamp(-1.0, 1.0).acos();
    let t1 = -2.0 * sqrt_q * ((alpha - 2.0 * std::f64::consts::PI) / 3.0).cos() - c2 / 3.0;
    let t2 = -2.0 * sqrt_q * ((alpha + 2.0 * std::f64::consts::PI) / 3.0).cos() - c2 / 3.0;

    if t2 <= 0.0 {
        return 0.0;
    }
    if t1 > 0.0 || (t1 < 0.0 && t2 > 0.0) {
        // objective(0) - objective(t2) = t2 * (z - t2/2 - lambda(a+1)/(a+t2))
        let gain = t2 * (z - 0.5 * t2 - lambda * (a + 1.0) / (a + t2));
        if gain > SICA_TIE_TOL {
            return t2;
        }
    }
    0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn prox_objective(pen: &Penalty, theta: f64, theta0: f64, lambda: f64) -> f64 {
        0.5 * (theta - theta0) * (theta - theta0) + pen.value_at(theta.abs(), lambda)
    }

    /// Grid search plus golden-section refinement; independent of the closed
    /// forms above.
    pub(crate) fn prox_oracle(pen: &Penalty, theta0: f64, lambda: f64, step: f64) -> f64 {
        let lo = -theta0.abs() - 1.0;
        let hi = theta0.abs() + 1.0;
        let m = ((hi - lo) / step).ceil() as usize;
        let mut best_t = 0.0;
        let mut best_v = prox_objective(pen, 0.0, theta0, lambda);
        for i in 0..=m {
            let t = lo + step * i as f64;
            let v = prox_objective(pen, t, theta0, lambda);
            if v < best_v {
                best_v = v;
                best_t = t;
            }
        }
        // golden-section on [best - step, best + step]
        let gr = (5.0_f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (best_t - step, best_t + step);
        let mut c = b - gr * (b - a);
        let mut d = a + gr * (b - a);
        let mut fc = prox_objective(pen, c, theta0, lambda);
        let mut fd = prox_objective(pen, d, theta0, lambda);
        while (b - a).abs() > 1e-9 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - gr * (b - a);
                fc = prox_objective(pen, c, theta0, lambda);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + gr * (b - a);
                fd = prox_objective(pen, d, theta0, lambda);
            }
        }
        let t = 0.5 * (a + b);
        if prox_objective(pen, t, theta0, lambda) < best_v {
            t
        } else {
            best_t
        }
    }

    #[test]
    fn value_basics() {
        for pen in [
            Penalty::l1(),
            Penalty::scad(3.7).unwrap(),
            Penalty::mcp(3.7).unwrap(),
            Penalty::sica(1.0).unwrap(),
            Penalty::elastic_net(0.5).unwrap(),
        ] {
            assert_eq!(pen.value(0.0, 0.7).unwrap(), 0.0);
            assert!(pen.value(-1.0, 1.0).is_err());
            assert!(pen.value(1.0, -1.0).is_err());
        }
        // SICA passes through (1, 1) at a = 1, lambda = 1
        let sica = Penalty::sica(1.0).unwrap();
        assert_eq!(sica.value(1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn scad_value_matches_quadrature_of_derivative() {
        // adaptive Simpson on the derivative, tolerance well below 1e-8
        fn simpson(pen: &Penalty, lambda: f64, a: f64, b: f64, fa: f64, fb: f64, fm: f64, tol: f64) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = pen.derivative_at(lm.max(1e-300), lambda);
            let frm = pen.derivative_at(rm.max(1e-300), lambda);
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (left + right - whole).abs() < 15.0 * tol || b - a < 1e-12 {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(pen, lambda, a, m, fa, fm, flm, tol / 2.0)
                    + simpson(pen, lambda, m, b, fm, fb, frm, tol / 2.0)
            }
        }
        let pen = Penalty::scad(3.7).unwrap();
        let (lambda, theta) = (1.0, 10.0);
        let fa = pen.derivative_at(1e-300, lambda);
        let fb = pen.derivative_at(theta, lambda);
        let fm = pen.derivative_at(theta / 2.0, lambda);
        let integral = simpson(&pen, lambda, 0.0, theta, fa, fb, fm, 1e-11);
        assert_abs_diff_eq!(pen.value(theta, lambda).unwrap(), integral, epsilon = 1e-8);
    }

    #[test]
    fn derivative_values() {
        let scad = Penalty::scad(3.7).unwrap();
        assert_eq!(scad.derivative(10.0, 1.0).unwrap(), 0.0); // theta > a*lambda
        assert_eq!(scad.derivative(0.5, 1.0).unwrap(), 1.0); // theta <= lambda
        let mcp = Penalty::mcp(2.0).unwrap();
        assert_eq!(mcp.derivative(1.0, 1.0).unwrap(), 0.5);
        let sica_big = Penalty::sica(1e6).unwrap();
        let lambda = 0.7;
        assert_abs_diff_eq!(
            sica_big.derivative(1.3, lambda).unwrap(),
            lambda,
            epsilon = 1e-5
        );
        assert!(scad.derivative(0.0, 1.0).is_err());
        assert!(scad.derivative(-1.0, 1.0).is_err());
    }

    #[test]
    fn max_concavity_values() {
        assert_eq!(Penalty::l1().max_concavity(0.3), 0.0);
        assert_eq!(Penalty::elastic_net(0.5).unwrap().max_concavity(0.3), 0.0);
        assert_abs_diff_eq!(
            Penalty::scad(3.7).unwrap().max_concavity(1.0),
            1.0 / 2.7,
            epsilon = 1e-15
        );
        assert_eq!(Penalty::mcp(3.7).unwrap().max_concavity(1.0), 1.0 / 3.7);
        assert_abs_diff_eq!(
            Penalty::sica(1.0).unwrap().max_concavity(0.2),
            0.8,
            epsilon = 1e-15
        );
    }

    #[test]
    fn concavity_bounds_derivative_slopes() {
        use rand::Rng;
        let mut rng = crate::seed::rng_from(11, "concavity", 0);
        for pen in [
            Penalty::l1(),
            Penalty::scad(3.7).unwrap(),
            Penalty::mcp(2.5).unwrap(),
            Penalty::sica(0.5).unwrap(),
            Penalty::elastic_net(0.3).unwrap(),
        ] {
            for _ in 0..500 {
                let lambda = rng.gen_range(0.0..2.0);
                let mut t1 = rng.gen_range(1e-6..5.0_f64);
                let mut t2 = rng.gen_range(1e-6..5.0_f64);
                if t1 > t2 {
                    std::mem::swap(&mut t1, &mut t2);
                }
                if t2 - t1 < 1e-9 {
                    continue;
                }
                let slope =
                    -(pen.derivative_at(t2, lambda) - pen.derivative_at(t1, lambda)) / (t2 - t1);
                assert!(
                    slope <= pen.max_concavity(lambda) + 1e-9,
                    "{}: slope {slope} exceeds kappa {}",
                    pen.label(),
                    pen.max_concavity(lambda)
                );
            }
        }
    }

    #[test]
    fn prox_fixed_points() {
        for pen in [
            Penalty::l1(),
            Penalty::scad(3.7).unwrap(),
            Penalty::mcp(3.7).unwrap(),
            Penalty::sica(0.5).unwrap(),
            Penalty::elastic_net(0.5).unwrap(),
        ] {
            assert_eq!(pen.univariate_minimize(0.0, 0.9), 0.0);
            assert_eq!(pen.univariate_minimize(1.7, 0.0), 1.7);
        }
        assert_eq!(Penalty::l1().univariate_minimize(1.5, 1.0), 0.5);
        assert_eq!(Penalty::l1().univariate_minimize(-1.5, 1.0), -0.5);
        // SCAD is unbiased beyond a*lambda
        let scad = Penalty::scad(3.7).unwrap();
        assert_eq!(scad.univariate_minimize(4.0, 1.0), 4.0);
        assert_eq!(scad.univariate_minimize(-9.9, 2.0), -9.9);
    }

    #[test]
    fn sica_prox_matches_grid_oracle() {
        let pen = Penalty::sica(0.5).unwrap();
        let lambda = 0.3;
        for &theta0 in &[0.1, -0.1, 0.5, -0.5, 1.0, -1.0, 3.0, -3.0] {
            let closed = pen.univariate_minimize(theta0, lambda);
            let oracle = prox_oracle(&pen, theta0, lambda, 1e-5);
            let f_closed = prox_objective(&pen, closed, theta0, lambda);
            let f_oracle = prox_objective(&pen, oracle, theta0, lambda);
            assert!(
                f_closed <= f_oracle + 1e-10,
                "theta0={theta0}: closed {f_closed} vs oracle {f_oracle}"
            );
        }
    }

    #[test]
    fn prox_sign_and_shrinkage() {
        use rand::Rng;
        let mut rng = crate::seed::rng_from(5, "prox-props", 0);
        let pens = [
            Penalty::l1(),
            Penalty::scad(3.7).unwrap(),
            Penalty::mcp(3.7).unwrap(),
            Penalty::sica(1.0).unwrap(),
            Penalty::sica(0.1).unwrap(),
            Penalty::elastic_net(0.5).unwrap(),
        ];
        for pen in pens {
            for _ in 0..2000 {
                let theta0 = rng.gen_range(-5.0..5.0);
                let lambda = rng.gen_range(0.0..2.0);
                let t = pen.univariate_minimize(theta0, lambda);
                assert!(
                    t == 0.0 || t.signum() == theta0.signum(),
                    "{}: sign flip at ({theta0}, {lambda}) -> {t}",
                    pen.label()
                );
                assert!(
                    t.abs() <= theta0.abs() + 1e-12,
                    "{}: expansion at ({theta0}, {lambda}) -> {t}",
                    pen.label()
                );
            }
        }
    }

    #[test]
    fn l1_and_mcp_shrink_monotonically_in_lambda() {
        for pen in [Penalty::l1(), Penalty::mcp(3.7).unwrap()] {
            for &theta0 in &[0.3, 1.0, 2.5, -1.7] {
                let mut prev = f64::INFINITY;
                for i in 0..60 {
                    let lambda = i as f64 * 0.05;
                    let t = pen.univariate_minimize(theta0, lambda).abs();
                    assert!(
                        t <= prev + 1e-12,
                        "{}: |prox| grew with lambda at theta0={theta0}",
                        pen.label()
                    );
                    prev = t;
                }
            }
        }
    }

    #[test]
    fn enet_with_alpha_one_is_l1() {
        let enet = Penalty::elastic_net(1.0).unwrap();
        let l1 = Penalty::l1();
        for &theta in &[0.0, 0.3, 1.5, 4.0] {
            for &lambda in &[0.0, 0.2, 1.0] {
                assert_eq!(enet.value_at(theta, lambda), l1.value_at(theta, lambda));
                assert_eq!(
                    enet.univariate_minimize(theta, lambda),
                    l1.univariate_minimize(theta, lambda)
                );
            }
        }
    }

    #[test]
    fn constructors_enforce_shape_ranges() {
        assert!(Penalty::scad(2.0).is_err());
        assert!(Penalty::scad(1.5).is_err());
        assert!(Penalty::mcp(1.0).is_err());
        assert!(Penalty::sica(0.0).is_err());
        assert!(Penalty::sica(-1.0).is_err());
        assert!(Penalty::elastic_net(0.0).is_err());
        assert!(Penalty::elastic_net(1.2).is_err());
    }

    mod prop {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn prox_never_beats_objective_at_zero_or_theta0(
                theta0 in -5.0..5.0f64,
                lambda in 0.0..2.0f64,
                which in 0usize..6,
            ) {
                let pen = match which {
                    0 => Penalty::l1(),
                    1 => Penalty::scad(3.7).unwrap(),
                    2 => Penalty::mcp(3.7).unwrap(),
                    3 => Penalty::sica(1.0).unwrap(),
                    4 => Penalty::sica(0.1).unwrap(),
                    _ => Penalty::elastic_net(0.5).unwrap(),
                };
                let t = pen.univariate_minimize(theta0, lambda);
                let f = prox_objective(&pen, t, theta0, lambda);
                prop_assert!(f <= prox_objective(&pen, 0.0, theta0, lambda) + 1e-12);
                prop_assert!(f <= prox_objective(&pen, theta0, theta0, lambda) + 1e-12);
            }
        }
    }
}
