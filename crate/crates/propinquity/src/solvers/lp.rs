//! Dense two-phase primal simplex with Bland's rule.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::solve_real;
use crate::scalar::Scalar;

/// Pivot cap before the solver reports a breakdown.
pub const LP_MAX_PIVOTS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

/// `optimize objective·x` subject to `rows[i]·x (sense) rhs[i]` and per-variable bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T> {
    pub objective: Vec<T>,
    pub maximize: bool,
    pub rows: Vec<Vec<T>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<T>,
    pub lower: Vec<Option<T>>,
    pub upper: Vec<Option<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    /// A program over nonnegative variables with no constraints yet.
    pub fn new(objective: Vec<T>, maximize: bool) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            maximize,
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![Some(T::zero()); n],
            upper: vec![None; n],
        }
    }

    /// A program whose variables are all free.
    pub fn free(objective: Vec<T>, maximize: bool) -> Self {
        let mut p = Self::new(objective, maximize);
        p.lower.iter_mut().for_each(|l| *l = None);
        p
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, row: Vec<T>, sense: Sense, rhs: T) {
        assert_eq!(row.len(), self.objective.len(), "row width");
        self.rows.push(row);
        self.senses.push(sense);
        self.rhs.push(rhs);
    }

    pub fn set_bounds(&mut self, j: usize, lower: Option<T>, upper: Option<T>) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub status: LpStatus,
    pub x: Vec<T>,
    pub objective: T,
    /// Multipliers of the original rows; zero for rows found redundant.
    pub duals: Vec<T>,
    pub dual_objective: T,
    pub primal_residual: T,
    pub dual_residual: T,
    pub pivots: usize,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("simplex breakdown after {pivots} pivots; last basis {basis:?}")]
    Breakdown { pivots: usize, basis: Vec<usize> },
    #[error("malformed program: {0}")]
    Malformed(String),
}

enum VarMap<T> {
    Shifted { col: usize, shift: T },
    Reflected { col: usize, shift: T },
    Split { pos: usize, neg: usize },
}

struct Standard<T> {
    a: Vec<Vec<T>>,
    b: Vec<T>,
    c: Vec<T>,
    row_sign: Vec<T>,
    unit_col: Vec<Option<usize>>,
    maps: Vec<VarMap<T>>,
    offset: T,
    n_orig_rows: usize,
}

fn standardize<T: Scalar>(p: &LinearProgram<T>) -> Standard<T> {
    let n = p.num_vars();
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, T)> = Vec::new();
    for j in 0..n {
        match (p.lower[j], p.upper[j]) {
            (Some(l), u) => {
                maps.push(VarMap::Shifted { col: ncols, shift: l });
                if let Some(u) = u {
                    bound_rows.push((ncols, u - l));
                }
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap::Reflected { col: ncols, shift: u });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
                ncols += 2;
            }
        }
    }
    let mut rows: Vec<(Vec<T>, Sense, T)> = Vec::new();
    for (i, row) in p.rows.iter().enumerate() {
        let mut r = vec![T::zero(); ncols];
        let mut rhs = p.rhs[i];
        for (j, &aij) in row.iter().enumerate() {
            if aij == T::zero() {
                continue;
            }
            match maps[j] {
                VarMap::Shifted { col, shift } => {
                    r[col] += aij;
                    rhs -= aij * shift;
                }
                VarMap::Reflected { col, shift } => {
                    r[col] -= aij;
                    rhs -= aij * shift;
                }
                VarMap::Split { pos, neg } => {
                    r[pos] += aij;
                    r[neg] -= aij;
                }
            }
        }
        rows.push((r, p.senses[i], rhs));
    }
    for (col, ub) in bound_rows {
        let mut r = vec![T::zero(); ncols];
        r[col] = T::one();
        rows.push((r, Sense::Le, ub));
    }
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let total = ncols + n_slack;
    let mut a = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    let mut row_sign = Vec::with_capacity(rows.len());
    let mut unit_col = Vec::with_capacity(rows.len());
    let mut s = ncols;
    for (r, sense, rhs) in rows {
        let mut full = r;
        full.resize(total, T::zero());
        let mut slack = None;
        match sense {
            Sense::Le => {
                full[s] = T::one();
                slack = Some(s);
                s += 1;
            }
            Sense::Ge => {
                full[s] = -T::one();
                slack = Some(s);
                s += 1;
            }
            Sense::Eq => {}
        }
        let sign = if rhs < T::zero() { -T::one() } else { T::one() };
        if sign < T::zero() {
            full.iter_mut().for_each(|x| *x = -*x);
        }
        let unit = slack.filter(|&c| full[c] > T::zero());
        a.push(full);
        b.push(rhs * sign);
        row_sign.push(sign);
        unit_col.push(unit);
    }
    let mut c = vec![T::zero(); total];
    let mut offset = T::zero();
    for (j, &cj) in p.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shifted { col, shift } => {
                c[col] += cj;
                offset += cj * shift;
            }
            VarMap::Reflected { col, shift } => {
                c[col] -= cj;
                offset += cj * shift;
            }
            VarMap::Split { pos, neg } => {
                c[pos] += cj;
                c[neg] -= cj;
            }
        }
    }
    if p.maximize {
        c.iter_mut().for_each(|x| *x = -*x);
    }
    Standard { a, b, c, row_sign, unit_col, maps, offset, n_orig_rows: p.rows.len() }
}

struct Tableau<T> {
    m: usize,
    width: usize,
    cells: Vec<T>,
    obj: Vec<T>,
    basis: Vec<usize>,
}

impl<T: Scalar> Tableau<T> {
    fn at(&self, i: usize, j: usize) -> T {
        self.cells[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> T {
        self.cells[i * self.width + self.width - 1]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width;
        let p = self.cells[r * w + c];
        for j in 0..w {
            self.cells[r * w + j] /= p;
        }
        let prow: Vec<T> = self.cells[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.cells[i * w + c];
            if f == T::zero() {
                continue;
            }
            let row = &mut self.cells[i * w..(i + 1) * w];
            for (x, &pv) in row.iter_mut().zip(&prow) {
                *x -= f * pv;
            }
            row[c] = T::zero();
        }
        let f = self.obj[c];
        if f != T::zero() {
            for (x, &pv) in self.obj.iter_mut().zip(&prow) {
                *x -= f * pv;
            }
            self.obj[c] = T::zero();
        }
        self.basis[r] = c;
    }

    fn set_objective(&mut self, costs: &[T]) {
        let w = self.width;
        self.obj = vec![T::zero(); w];
        self.obj[..costs.len()].copy_from_slice(costs);
        for i in 0..self.m {
            let cb = self.obj[self.basis[i]];
            if cb != T::zero() {
                for j in 0..w {
                    let v = self.cells[i * w + j];
                    self.obj[j] -= cb * v;
                }
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.cells.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.m -= 1;
    }

    /// Runs Bland's rule over columns `< allowed`; returns false when unbounded.
    fn run(&mut self, allowed: usize, tol: T, piv_tol: T, pivots: &mut usize) -> Result<bool, LpError> {
        loop {
            let entering = (0..allowed).find(|&j| self.obj[j] < -tol);
            let Some(c) = entering else { return Ok(true) };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > piv_tol {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let slack = tol * (T::one() + br.abs());
                            if ratio < br - slack || (ratio <= br + slack && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else { return Ok(false) };
            self.pivot(r, c);
            *pivots += 1;
            if *pivots > LP_MAX_PIVOTS {
                return Err(LpError::Breakdown { pivots: *pivots, basis: self.basis.clone() });
            }
        }
    }
}

/// Solves a linear program with the two-phase primal simplex method and Bland's rule.
pub fn solve_lp<T: Scalar>(p: &LinearProgram<T>) -> Result<Solution<T>, LpError> {
    let n = p.num_vars();
    if p.rows.len() != p.senses.len() || p.rows.len() != p.rhs.len() || p.lower.len() != n || p.upper.len() != n {
        return Err(LpError::Malformed("inconsistent dimensions".into()));
    }
    let finite = p.objective.iter().chain(p.rhs.iter()).chain(p.rows.iter().flatten()).all(|x| x.is_finite());
    if !finite {
        return Err(LpError::Malformed("non-finite entry".into()));
    }
    let std = standardize(p);
    let m = std.a.len();
    let ncols = std.c.len();
    let scale = std
        .a
        .iter()
        .flatten()
        .chain(std.b.iter())
        .chain(std.c.iter())
        .fold(T::one(), |s, x| s.max(x.abs()));
    let tol = T::tol(1e-11) * scale;
    let piv_tol = T::tol(1e-9);

    let mut art_rows = Vec::new();
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        match std.unit_col[i] {
            Some(c) => basis.push(c),
            None => {
                basis.push(ncols + art_rows.len());
                art_rows.push(i);
            }
        }
    }
    let nart = art_rows.len();
    let width = ncols + nart + 1;
    let mut cells = vec![T::zero(); m * width];
    for i in 0..m {
        cells[i * width..i * width + ncols].copy_from_slice(&std.a[i]);
        cells[i * width + width - 1] = std.b[i];
    }
    for (k, &i) in art_rows.iter().enumerate() {
        cells[i * width + ncols + k] = T::one();
    }
    let mut tab = Tableau { m, width, cells, obj: Vec::new(), basis };
    let mut pivots = 0usize;
    let mut kept_rows: Vec<usize> = (0..m).collect();

    if nart > 0 {
        let mut costs = vec![T::zero(); ncols + nart];
        costs[ncols..].iter_mut().for_each(|c| *c = T::one());
        tab.set_objective(&costs);
        tab.run(ncols + nart, tol, piv_tol, &mut pivots)?;
        let infeas = -tab.obj[width - 1];
        let bscale = std.b.iter().fold(T::one(), |s, x| s.max(x.abs()));
        if infeas > T::tol(1e-9) * bscale {
            return Ok(infeasible(p, pivots));
        }
        let mut i = 0;
        while i < tab.m {
            if tab.basis[i] >= ncols {
                let col = (0..ncols).find(|&j| tab.at(i, j).abs() > piv_tol);
                match col {
                    Some(j) => {
                        tab.pivot(i, j);
                        pivots += 1;
                        i += 1;
                    }
                    None => {
                        tab.remove_row(i);
                        kept_rows.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        let w_old = tab.width;
        let w_new = ncols + 1;
        let mut cells = Vec::with_capacity(tab.m * w_new);
        for i in 0..tab.m {
            cells.extend_from_slice(&tab.cells[i * w_old..i * w_old + ncols]);
            cells.push(tab.cells[i * w_old + w_old - 1]);
        }
        tab.cells = cells;
        tab.width = w_new;
    }
    tab.set_objective(&std.c);
    let bounded = tab.run(ncols, tol, piv_tol, &mut pivots)?;
    if !bounded {
        return Ok(Solution {
            status: LpStatus::Unbounded,
            x: vec![T::zero(); n],
            objective: if p.maximize { T::infinity() } else { T::neg_infinity() },
            duals: vec![T::zero(); p.rows.len()],
            dual_objective: T::nan(),
            primal_residual: T::zero(),
            dual_residual: T::zero(),
            pivots,
        });
    }

    let mk = tab.m;
    let bmat: Vec<Vec<T>> = kept_rows.iter().map(|&i| tab.basis.iter().map(|&c| std.a[i][c]).collect()).collect();
    let bvec: Vec<T> = kept_rows.iter().map(|&i| std.b[i]).collect();
    let (yb, pi) = match solve_real(&bmat, &bvec) {
        Some(yb) => {
            let bt: Vec<Vec<T>> = (0..mk).map(|r| (0..mk).map(|c| bmat[c][r]).collect()).collect();
            let cb: Vec<T> = tab.basis.iter().map(|&c| std.c[c]).collect();
            match solve_real(&bt, &cb) {
                Some(pi) => (yb, pi),
                None => return Err(LpError::Breakdown { pivots, basis: tab.basis.clone() }),
            }
        }
        None => return Err(LpError::Breakdown { pivots, basis: tab.basis.clone() }),
    };
    let mut y = vec![T::zero(); ncols];
    for (k, &c) in tab.basis.iter().enumerate() {
        y[c] = yb[k].max(T::zero());
    }
    let mut primal_residual = T::zero();
    for (k, &i) in kept_rows.iter().enumerate() {
        let lhs: T = std.a[i].iter().zip(&y).map(|(&a, &v)| a * v).sum();
        primal_residual = primal_residual.max((lhs - bvec[k]).abs());
    }
    let mut dual_residual = T::zero();
    for j in 0..ncols {
        let red = std.c[j] - kept_rows.iter().enumerate().map(|(k, &i)| pi[k] * std.a[i][j]).sum::<T>();
        dual_residual = dual_residual.max(-red);
    }
    let x: Vec<T> = std
        .maps
        .iter()
        .map(|mp| match *mp {
            VarMap::Shifted { col, shift } => shift + y[col],
            VarMap::Reflected { col, shift } => shift - y[col],
            VarMap::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    let objective: T = p.objective.iter().zip(&x).map(|(&c, &v)| c * v).sum();
    let sgn = if p.maximize { -T::one() } else { T::one() };
    let dual_std: T = pi.iter().zip(&bvec).map(|(&a, &b)| a * b).sum();
    let dual_objective = std.offset + sgn * dual_std;
    let mut duals = vec![T::zero(); std.n_orig_rows];
    for (k, &i) in kept_rows.iter().enumerate() {
        if i < std.n_orig_rows {
            duals[i] = sgn * std.row_sign[i] * pi[k];
        }
    }
    Ok(Solution {
        status: LpStatus::Optimal,
        x,
        objective,
        duals,
        dual_objective,
        primal_residual,
        dual_residual,
        pivots,
    })
}

fn infeasible<T: Scalar>(p: &LinearProgram<T>, pivots: usize) -> Solution<T> {
    Solution {
        status: LpStatus::Infeasible,
        x: vec![T::zero(); p.num_vars()],
        objective: T::nan(),
        duals: vec![T::zero(); p.rows.len()],
        dual_objective: T::nan(),
        primal_residual: T::zero(),
        dual_residual: T::zero(),
        pivots,
    }
}
