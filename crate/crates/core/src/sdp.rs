//! Small dense semidefinite programs over a (block-diagonal) symmetric matrix variable.
//!
//! Problems are stated directly in terms of the matrix variable `X`:
//!
//! ```text
//!   minimize / maximize   <W, X>
//!   subject to            G_i(X) = 0          (affine, matrix valued)
//!                         F_i(X) >= 0 or <= 0 (affine, symmetric matrix valued)
//! ```
//!
//! Only the entries of the diagonal blocks of `X` are decision variables, so the
//! block pattern holds exactly. Equalities are eliminated through a null-space
//! parameterization. What remains is solved by a log-det barrier path-following
//! method whose central points also yield dual matrices `Z_i = F_i^{-1} / t`; the
//! reported gap and dual residual come from that primal-dual pair.
//!
//! LMIs without a strictly feasible point (for example KYP sets of passive systems
//! with a transmission zero at the origin) are handled by facial reduction: the
//! phase-one dual exposes the directions every feasible point annihilates, those
//! are turned into linear equalities and the LMIs are compressed onto the
//! complement.

use nalgebra::{Cholesky, DVector, Dyn};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

pub type LinearMap = Box<dyn Fn(&Mat) -> Mat + Send + Sync>;

/// `X -> constant + linear(X)`.
pub struct AffineMap {
    constant: Mat,
    linear: LinearMap,
}

impl AffineMap {
    pub fn new(constant: Mat, linear: impl Fn(&Mat) -> Mat + Send + Sync + 'static) -> Self {
        Self { constant, linear: Box::new(linear) }
    }

    pub fn eval(&self, x: &Mat) -> Mat {
        &self.constant + (self.linear)(x)
    }

    fn eval_linear(&self, x: &Mat) -> Mat {
        (self.linear)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    /// `F(X) >= 0`
    PositiveSemidefinite,
    /// `F(X) <= 0`
    NegativeSemidefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SdpOptions {
    /// Relative duality-gap target: `gap <= gap_tol * (1 + |objective|)`.
    pub gap_tol: f64,
    /// Newton steps allowed per phase.
    pub max_iterations: usize,
    /// Barrier parameter growth factor.
    pub mu: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-9, max_iterations: 200, mu: 12.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub value: f64,
    pub matrix: Mat,
    /// Largest violation of the original equalities and LMIs at `matrix`.
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub facial_reductions: usize,
    pub certificate: Option<String>,
    pub warnings: Vec<String>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SdpStatus::Optimal
    }
}

pub struct SdpProblem {
    blocks: Vec<usize>,
    objective: Mat,
    sense: Sense,
    lmis: Vec<(AffineMap, Inequality)>,
    equalities: Vec<AffineMap>,
}

impl SdpProblem {
    /// New problem over a symmetric variable with the given diagonal block sizes.
    /// The default objective is `minimize trace(X)`.
    pub fn new(blocks: Vec<usize>) -> Self {
        let dim = blocks.iter().sum();
        Self {
            blocks,
            objective: Mat::identity(dim, dim),
            sense: Sense::Minimize,
            lmis: Vec::new(),
            equalities: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn objective(mut self, weight: Mat, sense: Sense) -> Self {
        self.objective = linalg::sym(&weight);
        self.sense = sense;
        self
    }

    pub fn minimize_trace(self) -> Self {
        let d = self.dim();
        self.objective(Mat::identity(d, d), Sense::Minimize)
    }

    pub fn maximize_trace(self) -> Self {
        let d = self.dim();
        self.objective(Mat::identity(d, d), Sense::Maximize)
    }

    pub fn lmi(mut self, map: AffineMap, kind: Inequality) -> Self {
        self.lmis.push((map, kind));
        self
    }

    /// `constant + linear(X) >= 0`
    pub fn lmi_psd(self, constant: Mat, linear: impl Fn(&Mat) -> Mat + Send + Sync + 'static) -> Self {
        self.lmi(AffineMap::new(constant, linear), Inequality::PositiveSemidefinite)
    }

    /// `constant + linear(X) <= 0`
    pub fn lmi_nsd(self, constant: Mat, linear: impl Fn(&Mat) -> Mat + Send + Sync + 'static) -> Self {
        self.lmi(AffineMap::new(constant, linear), Inequality::NegativeSemidefinite)
    }

    /// `constant + linear(X) = 0`
    pub fn equality(mut self, constant: Mat, linear: impl Fn(&Mat) -> Mat + Send + Sync + 'static) -> Self {
        self.equalities.push(AffineMap::new(constant, linear));
        self
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 || self.blocks.contains(&0) {
            return Err(Error::Dimension("empty block in SDP variable".into()));
        }
        if self.objective.shape() != (d, d) {
            return Err(Error::Dimension("objective weight does not match variable".into()));
        }
        let probe = Mat::zeros(d, d);
        for (map, _) in &self.lmis {
            let v = map.eval(&probe);
            if !v.is_square() {
                return Err(Error::Dimension("LMI map must be square".into()));
            }
        }
        Ok(())
    }

    /// Entry-wise basis of the block-diagonal symmetric matrices.
    fn basis(&self) -> Vec<Mat> {
        let d = self.dim();
        let mut out = Vec::new();
        let mut off = 0;
        for &s in &self.blocks {
            for i in 0..s {
                for j in i..s {
                    let mut e = Mat::zeros(d, d);
                    e[(off + i, off + j)] = 1.0;
                    e[(off + j, off + i)] = 1.0;
                    out.push(e);
                }
            }
            off += s;
        }
        out
    }

    fn assemble(basis: &[Mat], x: &DVector<f64>) -> Mat {
        let d = basis.first().map_or(0, |b| b.nrows());
        let mut m = Mat::zeros(d, d);
        for (e, &v) in basis.iter().zip(x.iter()) {
            if v != 0.0 {
                m += e * v;
            }
        }
        m
    }

    /// Largest violation of the original constraints at `x`.
    pub fn residual(&self, x: &Mat) -> f64 {
        let mut r: f64 = 0.0;
        for e in &self.equalities {
            r = r.max(e.eval(x).amax());
        }
        for (map, kind) in &self.lmis {
            let v = map.eval(x);
            let viol = match kind {
                Inequality::PositiveSemidefinite => -linalg::min_eig_sym(&v),
                Inequality::NegativeSemidefinite => linalg::max_eig_sym(&v),
            };
            r = r.max(viol);
        }
        r
    }

    pub fn solve(&self, opts: &SdpOptions) -> Result<SdpSolution> {
        self.run(opts, true)
    }

    /// Returns some strictly feasible point of the (reduced) feasible set.
    pub fn find_feasible(&self, opts: &SdpOptions) -> Result<SdpSolution> {
        self.run(opts, false)
    }

    fn run(&self, opts: &SdpOptions, optimize: bool) -> Result<SdpSolution> {
        self.validate()?;
        let basis = self.basis();
        let d = basis.len();
        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let c_full = DVector::from_iterator(d, basis.iter().map(|e| sign * self.objective.dot(e)));

        // equality elimination: x = x0 + N z
        let mut warnings = Vec::new();
        let (x0, null) = if self.equalities.is_empty() {
            (DVector::zeros(d), Mat::identity(d, d))
        } else {
            let mut rows: Vec<DVector<f64>> = Vec::new();
            let mut rhs: Vec<f64> = Vec::new();
            let images: Vec<Vec<Mat>> =
                self.equalities.iter().map(|e| basis.iter().map(|b| e.eval_linear(b)).collect()).collect();
            for (e, imgs) in self.equalities.iter().zip(&images) {
                let (r, c) = e.constant.shape();
                for i in 0..r {
                    for j in 0..c {
                        rows.push(DVector::from_iterator(d, imgs.iter().map(|m| m[(i, j)])));
                        rhs.push(-e.constant[(i, j)]);
                    }
                }
            }
            let a = Mat::from_fn(rows.len(), d, |i, j| rows[i][j]);
            let b = DVector::from_vec(rhs);
            let x0 = linalg::lstsq(&a, &b, 1e-12);
            let res = (&a * &x0 - &b).amax();
            if res > 1e-9 * (1.0 + b.amax()) {
                return Ok(self.infeasible(
                    &basis,
                    &x0,
                    format!("equality constraints are inconsistent (least-squares residual {res:.3e})"),
                    0,
                    0,
                ));
            }
            (x0, linalg::null_space(&a, 1e-12))
        };

        let mut face = Face::build(self, &basis, x0, null, &c_full);
        let mut iterations = 0;
        let mut reductions = 0;
        let max_reductions = self.lmis.iter().map(|(m, _)| m.constant.nrows()).sum::<usize>() + 1;

        // phase one with facial reduction
        let z_start = loop {
            if face.q() == 0 {
                let viol = face.min_eig();
                if viol < -1e-9 * face.scale() {
                    let x = face.x0.clone();
                    return Ok(self.infeasible(
                        &basis,
                        &x,
                        format!("feasible set of the equalities is a single point violating an LMI by {:.3e}", -viol),
                        iterations,
                        reductions,
                    ));
                }
                break DVector::zeros(0);
            }
            match face.phase_one(opts, &mut iterations)? {
                PhaseOne::Strict(z) => break z,
                PhaseOne::Infeasible(s) => {
                    let x = face.x0.clone();
                    return Ok(self.infeasible(
                        &basis,
                        &x,
                        format!("phase-one optimum {s:.3e} < 0: no point satisfies all LMIs"),
                        iterations,
                        reductions,
                    ));
                }
                PhaseOne::Exposed(us) => {
                    reductions += 1;
                    if reductions > max_reductions {
                        return Err(Error::Solver("facial reduction did not terminate".into()));
                    }
                    face.reduce(&us)?;
                }
                PhaseOne::MaxIterations(z) => {
                    let x = &face.x0 + &face.basis * z;
                    return Ok(self.finish(
                        &basis,
                        &x,
                        SdpStatus::MaxIterations,
                        f64::NAN,
                        f64::NAN,
                        iterations,
                        reductions,
                        vec!["phase one hit the iteration limit".into()],
                    ));
                }
            }
        };

        if face.has_free_objective_direction() && optimize {
            let x = &face.x0 + &face.basis * &z_start;
            return Ok(self.finish(
                &basis,
                &x,
                SdpStatus::Unbounded,
                f64::NAN,
                f64::NAN,
                iterations,
                reductions,
                vec!["objective improves along a direction no constraint restricts".into()],
            ));
        }

        if !optimize || face.q() == 0 {
            let x = &face.x0 + &face.basis * &z_start;
            return Ok(self.finish(&basis, &x, SdpStatus::Optimal, 0.0, 0.0, iterations, reductions, warnings));
        }

        let phase_two = face.phase_two(&z_start, opts, &mut iterations)?;
        warnings.extend(phase_two.warnings);
        let x = &face.x0 + &face.basis * &phase_two.z;
        Ok(self.finish(
            &basis,
            &x,
            phase_two.status,
            phase_two.gap,
            phase_two.dual_residual,
            iterations,
            reductions,
            warnings,
        ))
    }

    fn infeasible(
        &self,
        basis: &[Mat],
        x: &DVector<f64>,
        why: String,
        iterations: usize,
        reductions: usize,
    ) -> SdpSolution {
        let mut s =
            self.finish(basis, x, SdpStatus::Infeasible, f64::NAN, f64::NAN, iterations, reductions, Vec::new());
        s.certificate = Some(why);
        s
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        basis: &[Mat],
        x: &DVector<f64>,
        status: SdpStatus,
        gap: f64,
        dual_residual: f64,
        iterations: usize,
        reductions: usize,
        warnings: Vec<String>,
    ) -> SdpSolution {
        let matrix = Self::assemble(basis, x);
        SdpSolution {
            status,
            value: self.objective.dot(&matrix),
            primal_residual: self.residual(&matrix),
            matrix,
            dual_residual,
            gap,
            iterations,
            facial_reductions: reductions,
            certificate: None,
            warnings,
        }
    }
}

/// LMI `F(z) = f0 + sum_j z_j fj >= 0` in reduced coordinates.
#[derive(Clone)]
struct LmiData {
    f0: Mat,
    fj: Vec<Mat>,
}

impl LmiData {
    fn eval(&self, z: &DVector<f64>) -> Mat {
        let mut m = self.f0.clone();
        for (f, &v) in self.fj.iter().zip(z.iter()) {
            if v != 0.0 {
                m += f * v;
            }
        }
        m
    }

    fn size(&self) -> usize {
        self.f0.nrows()
    }
}

/// Current feasible face: `x = x0 + basis z`, LMIs in `z`.
struct Face {
    x0: DVector<f64>,
    basis: Mat,
    lmis: Vec<LmiData>,
    c: DVector<f64>,
    free_objective: bool,
}

enum PhaseOne {
    Strict(DVector<f64>),
    Infeasible(f64),
    Exposed(Vec<Mat>),
    MaxIterations(DVector<f64>),
}

struct PhaseTwo {
    z: DVector<f64>,
    status: SdpStatus,
    gap: f64,
    dual_residual: f64,
    warnings: Vec<String>,
}

impl Face {
    fn build(p: &SdpProblem, basis: &[Mat], x0: DVector<f64>, null: Mat, c_full: &DVector<f64>) -> Self {
        let x0m = SdpProblem::assemble(basis, &x0);
        let lmis = p
            .lmis
            .iter()
            .map(|(map, kind)| {
                let s = match kind {
                    Inequality::PositiveSemidefinite => 1.0,
                    Inequality::NegativeSemidefinite => -1.0,
                };
                let imgs: Vec<Mat> = basis.iter().map(|b| map.eval_linear(b)).collect();
                let f0 = linalg::sym(&map.eval(&x0m)) * s;
                let fj = (0..null.ncols())
                    .map(|j| {
                        let mut m = Mat::zeros(f0.nrows(), f0.ncols());
                        for (l, img) in imgs.iter().enumerate() {
                            let w = null[(l, j)];
                            if w != 0.0 {
                                m += img * w;
                            }
                        }
                        linalg::sym(&m) * s
                    })
                    .collect();
                LmiData { f0, fj }
            })
            .collect();
        let c = null.transpose() * c_full;
        let mut face = Face { x0, basis: null, lmis, c, free_objective: false };
        face.drop_free_directions();
        face
    }

    fn q(&self) -> usize {
        self.basis.ncols()
    }

    fn scale(&self) -> f64 {
        let mut s: f64 = 1.0;
        for l in &self.lmis {
            s = s.max(l.f0.amax());
            for f in &l.fj {
                s = s.max(f.amax());
            }
        }
        s
    }

    fn min_eig(&self) -> f64 {
        let z = DVector::zeros(self.q());
        self.lmis.iter().map(|l| linalg::min_eig_sym(&l.eval(&z))).fold(f64::INFINITY, f64::min)
    }

    fn has_free_objective_direction(&self) -> bool {
        self.free_objective
    }

    fn recombine(&mut self, shift: &DVector<f64>, n: &Mat) {
        self.x0 += &self.basis * shift;
        self.basis = &self.basis * n;
        self.c = n.transpose() * &self.c;
        for l in &mut self.lmis {
            let mut f0 = l.f0.clone();
            for (f, &v) in l.fj.iter().zip(shift.iter()) {
                f0 += f * v;
            }
            let fj = (0..n.ncols())
                .map(|j| {
                    let mut m = Mat::zeros(f0.nrows(), f0.ncols());
                    for (i, f) in l.fj.iter().enumerate() {
                        let w = n[(i, j)];
                        if w != 0.0 {
                            m += f * w;
                        }
                    }
                    m
                })
                .collect();
            l.f0 = f0;
            l.fj = fj;
        }
    }

    /// Removes parameter directions that no LMI sees.
    fn drop_free_directions(&mut self) {
        let q = self.q();
        if q == 0 {
            return;
        }
        let rows: usize = self.lmis.iter().map(|l| l.size() * l.size()).sum();
        let mut g = Mat::zeros(rows, q);
        let mut off = 0;
        for l in &self.lmis {
            let s = l.size() * l.size();
            for (j, f) in l.fj.iter().enumerate() {
                g.view_mut((off, j), (s, 1)).copy_from_slice(f.as_slice());
            }
            off += s;
        }
        let kernel = linalg::null_space(&g, 1e-11);
        if kernel.ncols() == 0 {
            return;
        }
        let kc = kernel.transpose() * &self.c;
        if kc.amax() > 1e-10 * (1.0 + self.c.amax()) {
            self.free_objective = true;
        }
        let keep = linalg::null_space(&kernel.transpose(), 1e-11);
        self.recombine(&DVector::zeros(q), &keep);
    }

    /// Adds `F_i(z) U_i = 0` and compresses each LMI onto the complement of `U_i`.
    fn reduce(&mut self, exposed: &[Mat]) -> Result<()> {
        let q = self.q();
        let mut rows: Vec<DVector<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for (l, u) in self.lmis.iter().zip(exposed) {
            if u.ncols() == 0 {
                continue;
            }
            let b0 = &l.f0 * u;
            let bj: Vec<Mat> = l.fj.iter().map(|f| f * u).collect();
            for i in 0..b0.nrows() {
                for k in 0..b0.ncols() {
                    rows.push(DVector::from_iterator(q, bj.iter().map(|m| m[(i, k)])));
                    rhs.push(-b0[(i, k)]);
                }
            }
        }
        let a = Mat::from_fn(rows.len(), q, |i, j| rows[i][j]);
        let b = DVector::from_vec(rhs);
        let shift = linalg::lstsq(&a, &b, 1e-9);
        let n = linalg::null_space(&a, 1e-7);
        self.recombine(&shift, &n);
        let mut kept = Vec::new();
        for (l, u) in self.lmis.drain(..).zip(exposed) {
            if u.ncols() == 0 {
                kept.push(l);
                continue;
            }
            let qm = linalg::null_space(&u.transpose(), 1e-10);
            if qm.ncols() == 0 {
                continue;
            }
            let comp = |m: &Mat| linalg::sym(&(qm.transpose() * m * &qm));
            kept.push(LmiData { f0: comp(&l.f0), fj: l.fj.iter().map(comp).collect() });
        }
        self.lmis = kept;
        self.drop_free_directions();
        Ok(())
    }

    fn phase_one(&self, opts: &SdpOptions, iterations: &mut usize) -> Result<PhaseOne> {
        let q = self.q();
        let scale = self.scale();
        let z0 = DVector::zeros(q);
        let lam0 = self.min_eig();
        let s0 = lam0 - 1.0 - 0.1 * lam0.abs();
        let tr0: f64 = self.lmis.iter().map(|l| l.f0.trace()).sum();
        let total: usize = self.lmis.iter().map(|l| l.size()).sum();
        let bound = tr0.abs() + 1e3 * total as f64 * scale;

        // variables y = (z, s); objective: minimize -s
        let mut lmis: Vec<LmiData> = self
            .lmis
            .iter()
            .map(|l| {
                let m = l.size();
                let mut fj = l.fj.clone();
                fj.push(-Mat::identity(m, m));
                LmiData { f0: l.f0.clone(), fj }
            })
            .collect();
        let mut trace_row: Vec<Mat> = (0..q)
            .map(|j| {
                let t: f64 = self.lmis.iter().map(|l| l.fj[j].trace()).sum();
                Mat::from_element(1, 1, -t)
            })
            .collect();
        trace_row.push(Mat::zeros(1, 1));
        lmis.push(LmiData { f0: Mat::from_element(1, 1, bound - tr0), fj: trace_row });
        let mut c = DVector::zeros(q + 1);
        c[q] = -1.0;
        let y0 = z0.insert_row(q, s0);

        let margin = 1e-7 * scale;
        let res = barrier(&lmis, &c, y0, 1.0, opts, iterations, |y| y[q] > margin)?;
        let s = res.y[q];
        let z = res.y.rows(0, q).into_owned();
        if s > 0.0 {
            return Ok(PhaseOne::Strict(z));
        }
        if res.status == BarrierStatus::MaxIterations {
            return Ok(PhaseOne::MaxIterations(z));
        }
        if s < -1e-7 * scale {
            return Ok(PhaseOne::Infeasible(s));
        }
        // exposing directions from the phase-one dual
        let n_lmi = self.lmis.len();
        let duals = &res.duals[..n_lmi];
        let wmax = duals.iter().map(linalg::max_eig_sym).fold(0.0, f64::max);
        if wmax <= 0.0 {
            return Err(Error::Solver("phase-one dual vanished".into()));
        }
        let exposed: Vec<Mat> = duals
            .iter()
            .map(|w| {
                let (vals, vecs) = linalg::sym_eigen_desc(w);
                let k = vals.iter().filter(|&&v| v > 1e-5 * wmax).count();
                vecs.columns(0, k).into_owned()
            })
            .collect();
        if exposed.iter().all(|u| u.ncols() == 0) {
            return Err(Error::Solver("phase one stalled without an exposing direction".into()));
        }
        Ok(PhaseOne::Exposed(exposed))
    }

    fn phase_two(&self, z0: &DVector<f64>, opts: &SdpOptions, iterations: &mut usize) -> Result<PhaseTwo> {
        let start = *iterations;
        let mut budget = 0;
        let res = barrier(&self.lmis, &self.c, z0.clone(), 1.0, opts, &mut budget, |_| false)?;
        *iterations = start + budget;
        let mut warnings = Vec::new();
        let status = match res.status {
            BarrierStatus::Converged => SdpStatus::Optimal,
            BarrierStatus::MaxIterations => SdpStatus::MaxIterations,
            BarrierStatus::Unbounded => SdpStatus::Unbounded,
            BarrierStatus::Stalled => {
                warnings.push(format!("Newton centering stalled at gap {:.3e}; returning last central point", res.gap));
                SdpStatus::Optimal
            }
        };
        let mut dual_residual: f64 = 0.0;
        for j in 0..self.q() {
            let s: f64 = self.lmis.iter().zip(&res.duals).map(|(l, z)| l.fj[j].dot(z)).sum();
            dual_residual = dual_residual.max((self.c[j] - s).abs());
        }
        Ok(PhaseTwo { z: res.y, status, gap: res.gap, dual_residual, warnings })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BarrierStatus {
    Converged,
    MaxIterations,
    Unbounded,
    Stalled,
}

struct BarrierResult {
    y: DVector<f64>,
    duals: Vec<Mat>,
    gap: f64,
    status: BarrierStatus,
}

fn factor_all(lmis: &[LmiData], y: &DVector<f64>) -> Option<Vec<Cholesky<f64, Dyn>>> {
    lmis.iter().map(|l| Cholesky::new(l.eval(y))).collect()
}

/// Gradient, Newton step and squared decrement of `t c^T y - sum log det F_i(y)`.
fn newton_step(
    lmis: &[LmiData],
    facs: &[Cholesky<f64, Dyn>],
    c: &DVector<f64>,
    t: f64,
) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let q = c.len();
    let mut grad = c * t;
    let mut hess = Mat::zeros(q, q);
    for (l, fac) in lmis.iter().zip(facs) {
        let lf = fac.l();
        let g: Vec<Mat> =
            l.fj.iter()
                .map(|f| {
                    let a = lf.solve_lower_triangular(f).expect("triangular");
                    lf.solve_lower_triangular(&a.transpose()).expect("triangular")
                })
                .collect();
        for j in 0..q {
            grad[j] -= g[j].trace();
            for k in 0..=j {
                let v = g[j].dot(&g[k]);
                hess[(j, k)] += v;
                if j != k {
                    hess[(k, j)] += v;
                }
            }
        }
    }
    let step = match Cholesky::new(hess.clone()) {
        Some(ch) => ch.solve(&(-&grad)),
        None => {
            let svd = linalg::svd(&hess, true, true);
            let smax = svd.singular_values.max();
            svd.solve(&(-&grad), 1e-14 * smax).map_err(|e| Error::Solver(format!("Newton system: {e}")))?
        }
    };
    let dec2 = -grad.dot(&step);
    if !dec2.is_finite() {
        return Err(Error::Solver("non-finite Newton decrement".into()));
    }
    Ok((grad, step, dec2))
}

/// Path following for `min c^T y  s.t.  F_i(y) > 0` from a strictly feasible `y0`.
fn barrier(
    lmis: &[LmiData],
    c: &DVector<f64>,
    y0: DVector<f64>,
    t0: f64,
    opts: &SdpOptions,
    iterations: &mut usize,
    stop: impl Fn(&DVector<f64>) -> bool,
) -> Result<BarrierResult> {
    let m_total: f64 = lmis.iter().map(|l| l.size() as f64).sum();
    let y_scale = 1.0 + y0.amax();
    let mut y = y0;
    let mut t = t0;
    let mut status = BarrierStatus::Converged;
    let mut facs =
        factor_all(lmis, &y).ok_or_else(|| Error::Solver("barrier start is not strictly feasible".into()))?;

    'outer: loop {
        let mut inner = 0;
        loop {
            let (_, step, dec2) = newton_step(lmis, &facs, c, t)?;
            // below 1e-10 centered; a decrement stuck near 1e-4 is the round-off floor
            if dec2 <= 1e-10 || (inner >= 8 && dec2 <= 1e-4) {
                break;
            }
            if *iterations >= opts.max_iterations {
                status = BarrierStatus::MaxIterations;
                break 'outer;
            }
            *iterations += 1;
            inner += 1;
            let dec = dec2.sqrt();
            let mut alpha = if dec > 0.25 { 1.0 / (1.0 + dec) } else { 1.0 };
            let mut accepted = false;
            for _ in 0..60 {
                let cand = &y + &step * alpha;
                if let Some(f) = factor_all(lmis, &cand) {
                    y = cand;
                    facs = f;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                status = BarrierStatus::Stalled;
                break 'outer;
            }
            if y.amax() > 1e12 * y_scale {
                status = BarrierStatus::Unbounded;
                break 'outer;
            }
            if stop(&y) {
                break 'outer;
            }
        }
        if stop(&y) {
            break;
        }
        let gap = m_total / t;
        let obj = c.dot(&y);
        if gap <= opts.gap_tol * (1.0 + obj.abs()) {
            break;
        }
        t *= opts.mu;
    }

    // dual estimate Z = (F^-1 - F^-1 F_lin(dy) F^-1) / t satisfies the dual equality exactly
    let (_, step, _) = newton_step(lmis, &facs, c, t)?;
    let mut duals = Vec::with_capacity(lmis.len());
    let mut corrected = true;
    for (l, f) in lmis.iter().zip(&facs) {
        let finv = f.inverse();
        let mut dl = Mat::zeros(l.size(), l.size());
        for (fj, &v) in l.fj.iter().zip(step.iter()) {
            dl += fj * v;
        }
        let z = linalg::sym(&((&finv - &finv * dl * &finv) / t));
        corrected &= linalg::min_eig_sym(&z) >= 0.0;
        duals.push(z);
    }
    if !corrected {
        duals = facs.iter().map(|f| f.inverse() / t).collect();
    }
    let gap = lmis.iter().zip(&duals).map(|(l, z)| l.eval(&y).dot(z)).sum::<f64>().abs();
    Ok(BarrierResult { y, duals, gap, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;

    fn scalar(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    #[test]
    fn scalar_lower_bound() {
        // minimize k  s.t.  k - 1 >= 0
        let p = SdpProblem::new(vec![1]).lmi_psd(scalar(-1.0), |x| x.clone());
        let s = p.solve(&SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.value - 1.0).abs() < 1e-8, "{}", s.value);
    }

    #[test]
    fn equality_pins_scalar_kyp() {
        // A = -1, B = 1, C = 1: -2K <= 0, K = 1
        let p = SdpProblem::new(vec![1]).lmi_nsd(scalar(0.0), |k| k * -2.0).equality(scalar(-1.0), |k| k.clone());
        let s = p.solve(&SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.matrix[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_point_is_infeasible() {
        // K = -1 violates K >= 0
        let p = SdpProblem::new(vec![1]).lmi_psd(scalar(0.0), |k| k.clone()).equality(scalar(1.0), |k| k.clone());
        let s = p.solve(&SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible);
        assert!(s.certificate.is_some());
    }

    #[test]
    fn infeasible_lmis_detected_by_phase_one() {
        // x >= 1 and x <= -1
        let p = SdpProblem::new(vec![1]).lmi_psd(scalar(-1.0), |x| x.clone()).lmi_nsd(scalar(1.0), |x| x.clone());
        let s = p.solve(&SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        // maximize x  s.t. x >= 0
        let p = SdpProblem::new(vec![1]).maximize_trace().lmi_psd(scalar(0.0), |x| x.clone());
        let s = p.solve(&SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Unbounded);
    }

    #[test]
    fn block_pattern_is_exact() {
        // minimize trace(Y) s.t. Y - M >= 0 with a dense M, Y restricted to blocks {1, 2}
        let m = from_rows(&[&[1.0, 0.5, 0.2], &[0.5, 1.0, 0.3], &[0.2, 0.3, 1.0]]);
        let mm = m.clone();
        let p = SdpProblem::new(vec![1, 2]).lmi_psd(-mm, |y| y.clone());
        let s = p.solve(&SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert_eq!(s.matrix[(0, 1)], 0.0);
        assert_eq!(s.matrix[(2, 0)], 0.0);
        assert!(s.primal_residual < 1e-7);
        assert!(linalg::min_eig_sym(&(&s.matrix - &m)) > -1e-8);
    }

    #[test]
    fn lossless_kyp_needs_facial_reduction() {
        // A = [[0,1],[-1,0]], B = [0,1]^T, C = [0,1]: the only certificate is I
        let a = from_rows(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        let b = from_rows(&[&[0.0], &[1.0]]);
        let c = from_rows(&[&[0.0, 1.0]]);
        let (a1, b1) = (a.clone(), b.clone());
        let p = SdpProblem::new(vec![2])
            .lmi_nsd(Mat::zeros(2, 2), move |k| a1.transpose() * k + k * &a1)
            .lmi_psd(Mat::zeros(2, 2), |k| k.clone())
            .equality(-c, move |k| b1.transpose() * k)
            .maximize_trace();
        let s = p.solve(&SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal, "{s:?}");
        assert!(s.facial_reductions > 0);
        assert!((&s.matrix - Mat::identity(2, 2)).amax() < 1e-7, "{}", s.matrix);
    }
}
