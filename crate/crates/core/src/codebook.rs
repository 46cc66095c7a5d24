//! Storage codes and system state.
//!
//! All node contents are kept symbolically: every stored fragment is a
//! [`CoeffVector`] over the M message fragments.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{FieldElement, PrimeField};
use crate::linalg::{singular_minor, vandermonde, CoeffVector, Matrix};
use crate::topology::Shape;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemParams {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub field: PrimeField,
}

impl SystemParams {
    pub fn new(n: usize, k: usize, m: usize, field: PrimeField) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Params(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        if m == 0 || !m.is_multiple_of(k) {
            return Err(Error::Params(format!("k={k} must divide M={m}")));
        }
        Ok(SystemParams { n, k, m, field })
    }

    /// Fragments stored per node.
    pub fn alpha(&self) -> usize {
        self.m / self.k
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Coded,
    Systematic,
    Parity,
}

/// Placement of systematic and parity nodes on an r x s grid with s even.
///
/// Odd-width grids with an even number of rows are handled by laying the code
/// out on the transpose; `(i, j)` coordinates below are always in the layout
/// frame, while node ids are physical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridLayout {
    rows: usize,
    cols: usize,
    transposed: bool,
}

impl GridLayout {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(Error::Params(format!("degenerate grid {rows}x{cols}")));
        }
        let transposed = if cols.is_multiple_of(2) {
            false
        } else if rows.is_multiple_of(2) {
            true
        } else {
            return Err(Error::Params(format!("grid {rows}x{cols} has an odd number of nodes")));
        };
        Ok(GridLayout { rows, cols, transposed })
    }

    /// Physical (rows, cols).
    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_transposed(&self) -> bool {
        self.transposed
    }

    /// Layout-frame (r, s), s even.
    pub fn r(&self) -> usize {
        if self.transposed { self.cols } else { self.rows }
    }

    pub fn s(&self) -> usize {
        if self.transposed { self.rows } else { self.cols }
    }

    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    pub fn k(&self) -> usize {
        self.n() / 2
    }

    pub fn node(&self, i: usize, j: usize) -> usize {
        assert!((1..=self.r()).contains(&i) && (1..=self.s()).contains(&j));
        let (pi, pj) = if self.transposed { (j, i) } else { (i, j) };
        (pi - 1) * self.cols + pj
    }

    pub fn coords(&self, node: usize) -> (usize, usize) {
        assert!((1..=self.n()).contains(&node));
        let (pi, pj) = ((node - 1) / self.cols + 1, (node - 1) % self.cols + 1);
        if self.transposed { (pj, pi) } else { (pi, pj) }
    }

    pub fn role(&self, node: usize) -> Role {
        if self.coords(node).1 <= self.s() / 2 {
            Role::Systematic
        } else {
            Role::Parity
        }
    }

    /// Index t in 1..=k of a systematic node's fragments.
    pub fn t_index(&self, node: usize) -> Option<usize> {
        let (i, j) = self.coords(node);
        (j <= self.s() / 2).then(|| (i - 1) * self.s() / 2 + j)
    }

    pub fn systematic_of(&self, t: usize) -> usize {
        let half = self.s() / 2;
        self.node((t - 1) / half + 1, (t - 1) % half + 1)
    }

    /// Parity partner of a systematic node (same row, column + s/2), or the
    /// systematic node a parity node protects.
    pub fn partner(&self, node: usize) -> usize {
        let (i, j) = self.coords(node);
        let half = self.s() / 2;
        if j <= half {
            self.node(i, j + half)
        } else {
            self.node(i, j - half)
        }
    }

    pub fn systematic_nodes(&self) -> Vec<usize> {
        (1..=self.n()).filter(|&u| self.role(u) == Role::Systematic).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CodeKind {
    /// Node i stores column i of a k x n Vandermonde generator.
    Tandem { evals: Vec<FieldElement> },
    /// The 2x3 interference-alignment code; nodes 4..6 systematic.
    Grid2x3 { alphas: [FieldElement; 3], rhos: [FieldElement; 3] },
    /// Systematic n = 2k grid code.
    GridGeneral { layout: GridLayout },
    /// Each of `alpha` stripes is an independent Vandermonde code.
    Striped { evals: Vec<FieldElement> },
}

impl CodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            CodeKind::Tandem { .. } => "tandem",
            CodeKind::Grid2x3 { .. } => "grid2x3",
            CodeKind::GridGeneral { .. } => "grid-general",
            CodeKind::Striped { .. } => "striped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StorageState {
    params: SystemParams,
    kind: CodeKind,
    shape: Shape,
    contents: Vec<Vec<CoeffVector>>,
}

impl StorageState {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn kind(&self) -> &CodeKind {
        &self.kind
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn field(&self) -> PrimeField {
        self.params.field
    }

    /// Fragments held by `node` (1-based).
    pub fn node(&self, node: usize) -> &[CoeffVector] {
        &self.contents[node - 1]
    }

    pub fn role(&self, node: usize) -> Role {
        match &self.kind {
            CodeKind::Tandem { .. } | CodeKind::Striped { .. } => Role::Coded,
            CodeKind::Grid2x3 { .. } => {
                if node >= 4 {
                    Role::Systematic
                } else {
                    Role::Parity
                }
            }
            CodeKind::GridGeneral { layout } => layout.role(node),
        }
    }

    /// Copy of this state with one node's contents replaced.
    pub fn with_node(&self, node: usize, frags: Vec<CoeffVector>) -> Result<StorageState> {
        if !(1..=self.params.n).contains(&node) {
            return Err(Error::NoSuchNode(node));
        }
        if frags.len() != self.params.alpha() || frags.iter().any(|v| v.len() != self.params.m) {
            return Err(Error::Dimension("replacement fragments have wrong shape".into()));
        }
        let mut s = self.clone();
        s.contents[node - 1] = frags;
        Ok(s)
    }

    /// Stacked coefficient matrix of `subset`, one row per stored fragment.
    pub fn stacked(&self, subset: &[usize]) -> Result<Matrix> {
        let mut rows = Vec::new();
        for &u in subset {
            if !(1..=self.params.n).contains(&u) {
                return Err(Error::NoSuchNode(u));
            }
            rows.extend(self.contents[u - 1].iter());
        }
        Matrix::from_vectors(self.params.field, &rows)
    }

    /// Concrete stored values for a given message, per node.
    pub fn encode(&self, message: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>> {
        if message.len() != self.params.m {
            return Err(Error::Dimension(format!("message of {} fragments, M = {}", message.len(), self.params.m)));
        }
        Ok(self.contents.iter().map(|frags| frags.iter().map(|v| v.eval(message)).collect()).collect())
    }

    /// Recover the message from the values stored on `subset` (k nodes, in order).
    pub fn reconstruct(&self, subset: &[usize], stored: &[Vec<FieldElement>]) -> Result<Vec<FieldElement>> {
        if subset.len() != self.params.k || stored.len() != subset.len() {
            return Err(Error::Dimension(format!("need exactly k={} nodes", self.params.k)));
        }
        let a = self.stacked(subset)?;
        let b: Vec<FieldElement> = stored.iter().flatten().copied().collect();
        a.solve(&b).map_err(|e| match e {
            Error::Singular => Error::NotMds(subset.to_vec()),
            e => e,
        })
    }

    pub fn dump(&self) -> StateDump {
        StateDump {
            params: DumpParams {
                n: self.params.n,
                k: self.params.k,
                m: self.params.m,
                q: self.params.field.modulus(),
                code: self.kind.name(),
                topology: self.shape,
            },
            nodes: (1..=self.params.n)
                .map(|u| DumpNode { node: u, role: self.role(u), fragments: self.contents[u - 1].clone() })
                .collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StateDump {
    pub params: DumpParams,
    pub nodes: Vec<DumpNode>,
}

#[derive(Debug, Serialize)]
pub struct DumpParams {
    pub n: usize,
    pub k: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub q: u64,
    pub code: &'static str,
    pub topology: Shape,
}

#[derive(Debug, Serialize)]
pub struct DumpNode {
    pub node: usize,
    pub role: Role,
    pub fragments: Vec<CoeffVector>,
}

fn check_evals(field: PrimeField, evals: &[FieldElement], n: usize) -> Result<()> {
    if evals.len() != n {
        return Err(Error::Params(format!("need {n} evaluation points, got {}", evals.len())));
    }
    for (i, a) in evals.iter().enumerate() {
        if a.field() != field {
            return Err(Error::FieldMismatch(a.field().modulus(), field.modulus()));
        }
        if evals[..i].contains(a) {
            return Err(Error::DuplicateEval(a.value()));
        }
    }
    Ok(())
}

/// Evaluation points 1..=n.
pub fn default_evals(field: PrimeField, n: usize) -> Vec<FieldElement> {
    (1..=n as u64).map(|i| field.elem(i)).collect()
}

pub fn build_tandem_code(params: SystemParams, evals: &[FieldElement]) -> Result<StorageState> {
    if params.alpha() != 1 {
        return Err(Error::Params(format!("tandem code stores one fragment per node (M = k), got M={}", params.m)));
    }
    if params.field.modulus() <= params.n as u64 {
        return Err(Error::Params(format!("tandem code needs q > n, got q={} n={}", params.field.modulus(), params.n)));
    }
    check_evals(params.field, evals, params.n)?;
    let g = vandermonde(evals, params.k)?;
    Ok(StorageState {
        params,
        kind: CodeKind::Tandem { evals: evals.to_vec() },
        shape: Shape::Tandem { n: params.n },
        contents: (0..params.n).map(|c| vec![g.column(c)]).collect(),
    })
}

/// Tandem code with evaluation points 1..=n over the smallest field with q > n.
pub fn tandem_code(n: usize, k: usize) -> Result<StorageState> {
    let field = PrimeField::smallest_above(n as u64);
    build_tandem_code(SystemParams::new(n, k, k, field)?, &default_evals(field, n))
}

/// `alpha` independent Vandermonde stripes: node i stores `G_i . m_s` for each
/// stripe s, where stripe s covers message fragments `s*k .. (s+1)*k`.
pub fn build_striped_code(params: SystemParams, evals: &[FieldElement], shape: Shape) -> Result<StorageState> {
    if params.field.modulus() <= params.n as u64 {
        return Err(Error::Params(format!("striped code needs q > n, got q={} n={}", params.field.modulus(), params.n)));
    }
    check_evals(params.field, evals, params.n)?;
    let g = vandermonde(evals, params.k)?;
    let (k, m) = (params.k, params.m);
    let contents = (0..params.n)
        .map(|c| {
            (0..params.alpha())
                .map(|s| {
                    let mut v = vec![0; m];
                    for u in 0..k {
                        v[s * k + u] = g.raw(u, c);
                    }
                    CoeffVector::from_values(params.field, &v)
                })
                .collect()
        })
        .collect();
    Ok(StorageState { params, kind: CodeKind::Striped { evals: evals.to_vec() }, shape, contents })
}

fn grid_2x3_inner(field: PrimeField, alphas: [FieldElement; 3], rhos: [FieldElement; 3]) -> Result<StorageState> {
    let params = SystemParams::new(6, 3, 6, field)?;
    if field.modulus() <= 3 {
        return Err(Error::Params(format!("2x3 grid code needs q > k = 3, got q={}", field.modulus())));
    }
    check_evals(field, &alphas, 3)?;
    if let Some(r) = rhos.iter().find(|r| r.field() != field) {
        return Err(Error::FieldMismatch(r.field().modulus(), field.modulus()));
    }
    let xi = vandermonde(&alphas, 3)?;
    // message order: a1 b1 c1 a2 b2 c2
    let unit = |i| CoeffVector::unit(field, 6, i);
    let mut contents = Vec::with_capacity(6);
    for i in 0..3 {
        let mut p1 = unit(3 + i).scale(rhos[i]);
        let mut p2 = CoeffVector::zero(field, 6);
        for j in 0..3 {
            p1 = p1.axpy(xi.get(j, i), &unit(j));
            p2 = p2.axpy(xi.get(j, i), &unit(3 + j));
        }
        contents.push(vec![p1, p2]);
    }
    for i in 0..3 {
        contents.push(vec![unit(i), unit(3 + i)]);
    }
    Ok(StorageState {
        params,
        kind: CodeKind::Grid2x3 { alphas, rhos },
        shape: Shape::Grid { rows: 2, cols: 3 },
        contents,
    })
}

/// The 2x3 grid code. Nodes 4, 5, 6 hold (a1,a2), (b1,b2), (c1,c2); node
/// i in 1..=3 holds `rho_i x2 + xi_i . m1` and `xi_i . m2`, with x2 the second
/// fragment of the systematic node below it and xi_i = (1, a_i, a_i^2).
pub fn build_grid_code_2x3(
    field: PrimeField,
    alphas: [FieldElement; 3],
    rhos: [FieldElement; 3],
) -> Result<StorageState> {
    if let Some(i) = rhos.iter().position(|r| r.is_zero()) {
        return Err(Error::Params(format!("rho_{} must be nonzero", i + 1)));
    }
    grid_2x3_inner(field, alphas, rhos)
}

/// Like [`build_grid_code_2x3`] but accepts zero rho coefficients, to study
/// the degenerate codes they produce.
pub fn build_grid_code_2x3_unchecked(
    field: PrimeField,
    alphas: [FieldElement; 3],
    rhos: [FieldElement; 3],
) -> Result<StorageState> {
    grid_2x3_inner(field, alphas, rhos)
}

/// 2x3 code with alphas (1,2,3), rhos (1,1,1) over GF(7).
pub fn grid_2x3_default() -> StorageState {
    let f = PrimeField::smallest_above(6);
    let a = [f.elem(1), f.elem(2), f.elem(3)];
    build_grid_code_2x3(f, a, [f.one(); 3]).expect("default parameters are valid")
}

/// Systematic grid code for n = 2k. Systematic node at layout (i, j) holds
/// (m1_t, m2_t) with t = (i-1)s/2 + j; its partner holds
/// `m2_t + xi_t . m1` and `xi_t . m2`, xi_t the t-th column of a k x k Vandermonde.
pub fn build_grid_code_general(layout: GridLayout, field: PrimeField) -> Result<StorageState> {
    let (n, k) = (layout.n(), layout.k());
    let params = SystemParams::new(n, k, 2 * k, field)?;
    if field.modulus() <= k as u64 {
        return Err(Error::Params(format!("grid code needs q > k, got q={} k={k}", field.modulus())));
    }
    let xi = vandermonde(&default_evals(field, k), k)?;
    let unit = |i| CoeffVector::unit(field, 2 * k, i);
    let mut contents = vec![Vec::new(); n];
    for t in 1..=k {
        let sys = layout.systematic_of(t);
        contents[sys - 1] = vec![unit(t - 1), unit(k + t - 1)];
        let mut p1 = unit(k + t - 1);
        let mut p2 = CoeffVector::zero(field, 2 * k);
        for u in 0..k {
            p1 = p1.axpy(xi.get(u, t - 1), &unit(u));
            p2 = p2.axpy(xi.get(u, t - 1), &unit(k + u));
        }
        contents[layout.partner(sys) - 1] = vec![p1, p2];
    }
    let (rows, cols) = layout.dims();
    Ok(StorageState { params, kind: CodeKind::GridGeneral { layout }, shape: Shape::Grid { rows, cols }, contents })
}

/// General grid code over the smallest prime q > n for which every square
/// submatrix of the k x k Vandermonde is nonsingular. That is exactly the MDS
/// condition for this construction; q > k alone does not guarantee it (2x4
/// over GF(11) loses nodes {2,3,4,7}). Over the integers all those minors are
/// positive, so some prime always works.
pub fn grid_code(rows: usize, cols: usize) -> Result<StorageState> {
    static CHOSEN: Mutex<BTreeMap<usize, u64>> = Mutex::new(BTreeMap::new());
    let layout = GridLayout::new(rows, cols)?;
    let k = layout.k();
    let cached = CHOSEN.lock().expect("field cache").get(&k).copied();
    let field = match cached {
        Some(q) => PrimeField::new(q)?,
        None => {
            let mut field = PrimeField::smallest_above(layout.n() as u64);
            while singular_minor(&vandermonde(&default_evals(field, k), k)?).is_some() {
                field = PrimeField::smallest_above(field.modulus());
            }
            CHOSEN.lock().expect("field cache").insert(k, field.modulus());
            field
        }
    };
    build_grid_code_general(layout, field)
}

/// Two-stripe Vandermonde code on an r x s grid with n = 2k, the storage
/// model of the nearest-helper baseline.
pub fn striped_grid_code(rows: usize, cols: usize) -> Result<StorageState> {
    let n = rows * cols;
    if n < 2 || n % 2 == 1 {
        return Err(Error::Params(format!("grid {rows}x{cols}: n = {n} must be even")));
    }
    let field = PrimeField::smallest_above(n as u64);
    let params = SystemParams::new(n, n / 2, n, field)?;
    build_striped_code(params, &default_evals(field, n), Shape::Grid { rows, cols })
}
