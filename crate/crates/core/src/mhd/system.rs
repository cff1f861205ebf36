use crate::spectral::{FourierGrid, SpectralError, SpectralScalar, SpectralVector2, WaveLattice};

use super::{project_mean_free, BackgroundField, FlowState};

/// Time derivatives of `(u, b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rates {
    pub du: SpectralVector2,
    pub db: SpectralVector2,
}

/// The four dealiased advection products appearing in the equations.
#[derive(Clone, Debug)]
pub struct AdvectionTerms {
    /// `(u·∇)u`
    pub uu: SpectralVector2,
    /// `(b·∇)b`
    pub bb: SpectralVector2,
    /// `(b·∇)u`
    pub bu: SpectralVector2,
    /// `(u·∇)b`
    pub ub: SpectralVector2,
}

/// Physical samples of a vector field and its four first derivatives.
struct PhysVector {
    v: [Vec<f64>; 2],
    /// `grad[i][j] = ∂_{j+1} v_{i+1}`
    grad: [[Vec<f64>; 2]; 2],
}

impl PhysVector {
    fn new(points: usize) -> Self {
        let z = || vec![0.0; points];
        Self {
            v: [z(), z()],
            grad: [[z(), z()], [z(), z()]],
        }
    }
}

/// Evaluator for the MHD right-hand side on one lattice.
///
/// Owns the padded FFT plan and physical scratch, so it is confined to the
/// thread that uses it. Build one per simulation.
#[derive(Debug)]
pub struct MhdSystem {
    bg: BackgroundField,
    grid: FourierGrid,
    u_phys: PhysVectorBox,
    b_phys: PhysVectorBox,
}

// Keeps `Debug` on the system without printing sample arrays.
struct PhysVectorBox(PhysVector);

impl std::fmt::Debug for PhysVectorBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("PhysVector")
    }
}

impl MhdSystem {
    pub fn new(lattice: WaveLattice, bg: BackgroundField) -> Self {
        let grid = FourierGrid::padded(lattice);
        let p = grid.points();
        Self {
            bg,
            grid,
            u_phys: PhysVectorBox(PhysVector::new(p)),
            b_phys: PhysVectorBox(PhysVector::new(p)),
        }
    }

    #[inline]
    pub fn lattice(&self) -> WaveLattice {
        self.grid.lattice()
    }

    #[inline]
    pub fn background(&self) -> &BackgroundField {
        &self.bg
    }

    pub fn set_background(&mut self, bg: BackgroundField) {
        self.bg = bg;
    }

    pub fn grid_mut(&mut self) -> &mut FourierGrid {
        &mut self.grid
    }

    fn check(&self, v: &SpectralVector2) -> Result<(), SpectralError> {
        if v.lattice() != self.lattice() {
            return Err(SpectralError::LatticeMismatch {
                left: self.lattice().modes(),
                right: v.lattice().modes(),
            });
        }
        Ok(())
    }

    fn load(grid: &mut FourierGrid, v: &SpectralVector2, out: &mut PhysVector) -> Result<(), SpectralError> {
        let [v1, v2] = &mut out.v;
        grid.inverse_pair_into(&v.x1, &v.x2, v1, v2)?;
        for (i, comp) in [&v.x1, &v.x2].into_iter().enumerate() {
            let [d1, d2] = &mut out.grad[i];
            grid.inverse_pair_into(&comp.partial_derivative(1), &comp.partial_derivative(2), d1, d2)?;
        }
        Ok(())
    }

    /// Physical values of `(a·∇)c` for the loaded fields, component `i`.
    fn advect_phys(a: &PhysVector, c: &PhysVector, i: usize, out: &mut [f64]) {
        let (a1, a2) = (&a.v[0], &a.v[1]);
        let (g1, g2) = (&c.grad[i][0], &c.grad[i][1]);
        for p in 0..out.len() {
            out[p] = a1[p] * g1[p] + a2[p] * g2[p];
        }
    }

    /// `(v·∇)f` for a vector `f`, componentwise, dealiased.
    pub fn advect(&mut self, v: &SpectralVector2, f: &SpectralVector2) -> Result<SpectralVector2, SpectralError> {
        self.check(v)?;
        self.check(f)?;
        Self::load(&mut self.grid, v, &mut self.u_phys.0)?;
        Self::load(&mut self.grid, f, &mut self.b_phys.0)?;
        let p = self.grid.points();
        let mut o1 = vec![0.0; p];
        let mut o2 = vec![0.0; p];
        Self::advect_phys(&self.u_phys.0, &self.b_phys.0, 0, &mut o1);
        Self::advect_phys(&self.u_phys.0, &self.b_phys.0, 1, &mut o2);
        let (x1, x2) = self.grid.forward_pair(&o1, &o2)?;
        Ok(SpectralVector2 { x1, x2 })
    }

    /// `(v·∇)f` for a scalar `f`, dealiased.
    pub fn advect_scalar(&mut self, v: &SpectralVector2, f: &SpectralScalar) -> Result<SpectralScalar, SpectralError> {
        let wrapped = SpectralVector2::new(f.clone(), SpectralScalar::zeros(f.lattice()))?;
        Ok(self.advect(v, &wrapped)?.x1)
    }

    /// All four advection products of the system.
    pub fn advection_terms(&mut self, u: &SpectralVector2, b: &SpectralVector2) -> Result<AdvectionTerms, SpectralError> {
        self.check(u)?;
        self.check(b)?;
        Self::load(&mut self.grid, u, &mut self.u_phys.0)?;
        Self::load(&mut self.grid, b, &mut self.b_phys.0)?;
        let p = self.grid.points();
        let mut tmp = [vec![0.0; p], vec![0.0; p]];
        let mut products = Vec::with_capacity(4);
        for (a, c) in [
            (&self.u_phys.0, &self.u_phys.0),
            (&self.b_phys.0, &self.b_phys.0),
            (&self.b_phys.0, &self.u_phys.0),
            (&self.u_phys.0, &self.b_phys.0),
        ] {
            let [t1, t2] = &mut tmp;
            Self::advect_phys(a, c, 0, t1);
            Self::advect_phys(a, c, 1, t2);
            let (x1, x2) = self.grid.forward_pair(t1, t2)?;
            products.push(SpectralVector2 { x1, x2 });
        }
        let mut it = products.into_iter();
        Ok(AdvectionTerms {
            uu: it.next().unwrap(),
            bb: it.next().unwrap(),
            bu: it.next().unwrap(),
            ub: it.next().unwrap(),
        })
    }

    /// Fused nonlinear terms `((b·∇)b − (u·∇)u, (b·∇)u − (u·∇)b)` with one
    /// pair of forward transforms per output.
    pub fn nonlinear(&mut self, u: &SpectralVector2, b: &SpectralVector2) -> Result<(SpectralVector2, SpectralVector2), SpectralError> {
        self.check(u)?;
        self.check(b)?;
        Self::load(&mut self.grid, u, &mut self.u_phys.0)?;
        Self::load(&mut self.grid, b, &mut self.b_phys.0)?;
        let up = &self.u_phys.0;
        let bp = &self.b_phys.0;
        let p = self.grid.points();
        let mut nu = [vec![0.0; p], vec![0.0; p]];
        let mut nb = [vec![0.0; p], vec![0.0; p]];
        let (u1, u2, b1, b2) = (&up.v[0], &up.v[1], &bp.v[0], &bp.v[1]);
        for i in 0..2 {
            let (du1, du2) = (&up.grad[i][0], &up.grad[i][1]);
            let (db1, db2) = (&bp.grad[i][0], &bp.grad[i][1]);
            let (nui, nbi) = (&mut nu[i], &mut nb[i]);
            for q in 0..p {
                nui[q] = (b1[q] * db1[q] + b2[q] * db2[q]) - (u1[q] * du1[q] + u2[q] * du2[q]);
                nbi[q] = (b1[q] * du1[q] + b2[q] * du2[q]) - (u1[q] * db1[q] + u2[q] * db2[q]);
            }
        }
        let (a1, a2) = self.grid.forward_pair(&nu[0], &nu[1])?;
        let (c1, c2) = self.grid.forward_pair(&nb[0], &nb[1])?;
        Ok((SpectralVector2 { x1: a1, x2: a2 }, SpectralVector2 { x1: c1, x2: c2 }))
    }

    /// Every term except the magnetic diffusion `Δb`:
    /// `du = P(n·∇b + (b·∇)b − (u·∇)u)`, `db = P(n·∇u + (b·∇)u − (u·∇)b)`.
    pub fn nonstiff(&mut self, u: &SpectralVector2, b: &SpectralVector2) -> Result<Rates, SpectralError> {
        let n = self.bg.n;
        let (mut nu, mut nb) = self.nonlinear(u, b)?;
        nu += &b.directional_derivative(n);
        nb += &u.directional_derivative(n);
        Ok(Rates {
            du: project_mean_free(&nu),
            db: project_mean_free(&nb),
        })
    }

    /// Full right-hand side. `db` is re-projected even though it is
    /// divergence-free analytically.
    pub fn rhs(&mut self, state: &FlowState) -> Result<Rates, SpectralError> {
        let n = self.bg.n;
        let (mut nu, mut nb) = self.nonlinear(&state.u, &state.b)?;
        nu += &state.b.directional_derivative(n);
        nb += &state.u.directional_derivative(n);
        nb += &state.b.laplacian();
        Ok(Rates {
            du: project_mean_free(&nu),
            db: project_mean_free(&nb),
        })
    }

    /// `(max |u|, max |b|)` over the padded physical grid.
    pub fn max_speeds(&mut self, state: &FlowState) -> Result<(f64, f64), SpectralError> {
        let mut out = [0.0; 2];
        for (slot, v) in out.iter_mut().zip([&state.u, &state.b]) {
            let (a, b) = self.grid.inverse_pair(&v.x1, &v.x2)?;
            *slot = a
                .iter()
                .zip(&b)
                .map(|(x, y)| x.hypot(*y))
                .fold(0.0, |m: f64, s| if m.is_nan() || s.is_nan() { f64::NAN } else { m.max(s) });
        }
        Ok((out[0], out[1]))
    }
}

/// `(v·∇)f` for a vector `f` with a throwaway plan.
pub fn advect(v: &SpectralVector2, f: &SpectralVector2) -> Result<SpectralVector2, SpectralError> {
    MhdSystem::new(v.lattice(), BackgroundField::uncertified([0.0, 0.0])).advect(v, f)
}

/// `(v·∇)f` for a scalar `f` with a throwaway plan.
pub fn advect_scalar(v: &SpectralVector2, f: &SpectralScalar) -> Result<SpectralScalar, SpectralError> {
    MhdSystem::new(v.lattice(), BackgroundField::uncertified([0.0, 0.0])).advect_scalar(v, f)
}

/// Right-hand side with a throwaway plan.
pub fn rhs(state: &FlowState, bg: &BackgroundField) -> Result<Rates, SpectralError> {
    MhdSystem::new(state.lattice(), *bg).rhs(state)
}
