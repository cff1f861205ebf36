//! Exact algebraic cancellations used by the `L²` and `H^m` energy estimates.
//!
//! Each entry is a pairing that vanishes identically for divergence-free,
//! mean-zero fields. Residuals carry the scale of the participating factors
//! so a tolerance can be stated independently of field size.

use serde::Serialize;

use crate::spectral::{SpectralError, SpectralVector2};

use super::{leray_project, BackgroundField, MhdSystem};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cancellation {
    pub name: String,
    /// Raw value of the pairing (should be zero).
    pub value: f64,
    /// Product of the factors' norms bounding the individual pairings.
    pub scale: f64,
}

impl Cancellation {
    fn new(name: impl Into<String>, value: f64, scale: f64) -> Self {
        Self {
            name: name.into(),
            value,
            scale,
        }
    }

    /// `|value| / scale`, zero when both vanish.
    pub fn normalized(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else if self.scale == 0.0 {
            f64::INFINITY
        } else {
            self.value.abs() / self.scale
        }
    }
}

fn dot(a: &SpectralVector2, b: &SpectralVector2) -> f64 {
    a.pairing(b, |_| 1.0)
}

/// Bound for `|⟨(v·∇)f, g⟩|`.
fn advect_scale(v: &SpectralVector2, f: &SpectralVector2, g: &SpectralVector2) -> f64 {
    v.wiener_norm() * f.homogeneous_norm(1.0) * g.l2_norm()
}

/// Evaluates every cancellation identity for `(u, b)`, including the
/// `D^α`-level identities for integer `α = 1..=max_alpha`.
pub fn cancellation_suite(
    sys: &mut MhdSystem,
    u: &SpectralVector2,
    b: &SpectralVector2,
    max_alpha: u32,
) -> Result<Vec<Cancellation>, SpectralError> {
    let n = sys.background().n;
    let n_abs = BackgroundField::uncertified(n).norm();
    let terms = sys.advection_terms(u, b)?;
    let mut out = Vec::new();

    out.push(Cancellation::new(
        "<u.grad u, u>",
        dot(&terms.uu, u),
        advect_scale(u, u, u),
    ));
    out.push(Cancellation::new(
        "<u.grad b, b>",
        dot(&terms.ub, b),
        advect_scale(u, b, b),
    ));

    // Gradient part of the full velocity forcing is orthogonal to u.
    let mut w = b.directional_derivative(n);
    w += &terms.bb;
    w -= &terms.uu;
    let grad_part = &w - &leray_project(&w);
    out.push(Cancellation::new(
        "<grad p, u>",
        dot(&grad_part, u),
        w.l2_norm() * u.l2_norm(),
    ));

    out.push(Cancellation::new(
        "<b.grad b, u> + <b.grad u, b>",
        dot(&terms.bb, u) + dot(&terms.bu, b),
        advect_scale(b, b, u) + advect_scale(b, u, b),
    ));
    out.push(Cancellation::new(
        "<n.grad b, u> + <n.grad u, b>",
        dot(&b.directional_derivative(n), u) + dot(&u.directional_derivative(n), b),
        n_abs * (b.homogeneous_norm(1.0) * u.l2_norm() + u.homogeneous_norm(1.0) * b.l2_norm()),
    ));

    for alpha in 1..=max_alpha {
        let s = alpha as f64;
        let du = u.fractional_derivative(s);
        let db = b.fractional_derivative(s);

        let u_du = sys.advect(u, &du)?;
        out.push(Cancellation::new(
            format!("<u.grad D^{alpha}u, D^{alpha}u>"),
            dot(&u_du, &du),
            advect_scale(u, &du, &du),
        ));
        let u_db = sys.advect(u, &db)?;
        out.push(Cancellation::new(
            format!("<u.grad D^{alpha}b, D^{alpha}b>"),
            dot(&u_db, &db),
            advect_scale(u, &db, &db),
        ));
        let dgrad = grad_part.fractional_derivative(s);
        out.push(Cancellation::new(
            format!("<D^{alpha} grad p, D^{alpha}u>"),
            dot(&dgrad, &du),
            w.fractional_derivative(s).l2_norm() * du.l2_norm(),
        ));
        let b_db = sys.advect(b, &db)?;
        let b_du = sys.advect(b, &du)?;
        out.push(Cancellation::new(
            format!("<b.grad D^{alpha}b, D^{alpha}u> + <b.grad D^{alpha}u, D^{alpha}b>"),
            dot(&b_db, &du) + dot(&b_du, &db),
            advect_scale(b, &db, &du) + advect_scale(b, &du, &db),
        ));
        let nb = b.directional_derivative(n).fractional_derivative(s);
        let nu = u.directional_derivative(n).fractional_derivative(s);
        out.push(Cancellation::new(
            format!("<D^{alpha}(n.grad b), D^{alpha}u> + <D^{alpha}(n.grad u), D^{alpha}b>"),
            dot(&nb, &du) + dot(&nu, &db),
            n_abs * (db.homogeneous_norm(1.0) * du.l2_norm() + du.homogeneous_norm(1.0) * db.l2_norm()),
        ));
    }
    Ok(out)
}
