use std::collections::BTreeMap;

use rand::Rng;

use super::matrix::{dot, DenseMatrix};
use super::AutogradError;

/// Index of a trainable parameter inside a parameter store.
pub type ParamId = usize;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(ParamId),
    MatMul(Var, Var),
    MatMulT(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Relu(Var),
    Tanh(Var),
    SoftmaxRows(Var),
    SegmentMean {
        input: Var,
        segments: Vec<usize>,
        counts: Vec<usize>,
    },
    SegmentSum {
        input: Var,
        segments: Vec<usize>,
    },
    SegmentSoftmax {
        input: Var,
        segments: Vec<usize>,
    },
    ConcatRows(Vec<Var>),
    GatherRows {
        input: Var,
        index: Vec<usize>,
    },
    RowInner(Var, Var),
    MulRows(Var, Var),
    Dropout {
        input: Var,
        mask: Vec<f64>,
    },
    Sum(Var),
    Mean(Var),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: DenseMatrix,
}

/// Per-parameter gradients produced by [`Tape::backward`].
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    grads: BTreeMap<ParamId, DenseMatrix>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&DenseMatrix> {
        self.grads.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &DenseMatrix)> {
        self.grads.iter().map(|(&k, v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    fn accumulate(&mut self, id: ParamId, g: DenseMatrix) {
        match self.grads.get_mut(&id) {
            Some(acc) => acc.add_assign(&g),
            None => {
                self.grads.insert(id, g);
            }
        }
    }
}

/// Wengert list for reverse-mode differentiation over dense matrices.
///
/// Nodes are appended in evaluation order, so the tape is always a DAG in
/// topological order and `backward` is a single reverse sweep.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn shape_err(op: &'static str, detail: String) -> AutogradError {
    AutogradError::Shape { op, detail }
}

fn check_segments(
    op: &'static str,
    rows: usize,
    segments: &[usize],
    n_segments: usize,
) -> Result<(), AutogradError> {
    if segments.len() != rows {
        return Err(shape_err(
            op,
            format!("{} segment ids for {rows} rows", segments.len()),
        ));
    }
    if let Some(&bad) = segments.iter().find(|&&s| s >= n_segments) {
        return Err(shape_err(
            op,
            format!("segment id {bad} out of range for {n_segments} segments"),
        ));
    }
    Ok(())
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &DenseMatrix {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> (usize, usize) {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, op: Op, value: DenseMatrix) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    /// Non-differentiated input.
    pub fn constant(&mut self, value: DenseMatrix) -> Var {
        self.push(Op::Constant, value)
    }

    /// Leaf whose gradient is reported under `id`.
    pub fn param(&mut self, id: ParamId, value: DenseMatrix) -> Var {
        self.push(Op::Param(id), value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, AutogradError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.rows() {
            return Err(shape_err(
                "matmul",
                format!("{:?} x {:?}", av.shape(), bv.shape()),
            ));
        }
        let out = av.matmul(bv);
        Ok(self.push(Op::MatMul(a, b), out))
    }

    /// `a · bᵀ`; the natural form of a linear layer with weights stored `out × in`.
    pub fn matmul_t(&mut self, a: Var, b: Var) -> Result<Var, AutogradError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.cols() {
            return Err(shape_err(
                "matmul_t",
                format!("{:?} x {:?}ᵀ", av.shape(), bv.shape()),
            ));
        }
        let out = av.matmul_t(bv);
        Ok(self.push(Op::MatMulT(a, b), out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, AutogradError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(shape_err(
                "add",
                format!("{:?} + {:?}", av.shape(), bv.shape()),
            ));
        }
        let mut out = av.clone();
        out.add_assign(bv);
        Ok(self.push(Op::Add(a, b), out))
    }

    /// Adds the `1 × c` row `b` to every row of `a`.
    pub fn add_row(&mut self, a: Var, b: Var) -> Result<Var, AutogradError> {
        let (av, bv) = (self.value(a), self.value(b));
        if bv.rows() != 1 || bv.cols() != av.cols() {
            return Err(shape_err(
                "add_row",
                format!("{:?} + row {:?}", av.shape(), bv.shape()),
            ));
        }
        let mut out = av.clone();
        let bias = bv.row(0);
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(bias) {
                *o += b;
            }
        }
        Ok(self.push(Op::AddRow(a, b), out))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let out = self.value(a).map(|v| v * factor);
        self.push(Op::Scale(a, factor), out)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let out = self.value(a).map(|v| v + c);
        self.push(Op::AddScalar(a), out)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.value(a).map(|v| v.max(0.0));
        self.push(Op::Relu(a), out)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.value(a).map(f64::tanh);
        self.push(Op::Tanh(a), out)
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let mut out = av.clone();
        for r in 0..out.rows() {
            softmax_in_place(out.row_mut(r));
        }
        self.push(Op::SoftmaxRows(a), out)
    }

    /// Mean of the rows sharing a segment id; output row `s` is segment `s`.
    /// Empty segments produce zero rows.
    pub fn segment_mean(
        &mut self,
        a: Var,
        segments: &[usize],
        n_segments: usize,
    ) -> Result<Var, AutogradError> {
        let av = self.value(a);
        check_segments("segment_mean", av.rows(), segments, n_segments)?;
        let mut counts = vec![0usize; n_segments];
        let mut out = DenseMatrix::zeros(n_segments, av.cols());
        for (r, &s) in segments.iter().enumerate() {
            counts[s] += 1;
            for (o, v) in out.row_mut(s).iter_mut().zip(av.row(r)) {
                *o += v;
            }
        }
        for (s, &c) in counts.iter().enumerate() {
            if c > 1 {
                let inv = 1.0 / c as f64;
                out.row_mut(s).iter_mut().for_each(|v| *v *= inv);
            }
        }
        Ok(self.push(
            Op::SegmentMean {
                input: a,
                segments: segments.to_vec(),
                counts,
            },
            out,
        ))
    }

    /// Sum of the rows sharing a segment id (a scatter-add).
    pub fn segment_sum(
        &mut self,
        a: Var,
        segments: &[usize],
        n_segments: usize,
    ) -> Result<Var, AutogradError> {
        let av = self.value(a);
        check_segments("segment_sum", av.rows(), segments, n_segments)?;
        let mut out = DenseMatrix::zeros(n_segments, av.cols());
        for (r, &s) in segments.iter().enumerate() {
            for (o, v) in out.row_mut(s).iter_mut().zip(av.row(r)) {
                *o += v;
            }
        }
        Ok(self.push(
            Op::SegmentSum {
                input: a,
                segments: segments.to_vec(),
            },
            out,
        ))
    }

    /// Softmax of an `n × 1` column taken independently within each segment.
    pub fn segment_softmax(
        &mut self,
        a: Var,
        segments: &[usize],
        n_segments: usize,
    ) -> Result<Var, AutogradError> {
        let av = self.value(a);
        if av.cols() != 1 {
            return Err(shape_err(
                "segment_softmax",
                format!("expected a column, got {:?}", av.shape()),
            ));
        }
        check_segments("segment_softmax", av.rows(), segments, n_segments)?;
        let x = av.values();
        let mut max = vec![f64::NEG_INFINITY; n_segments];
        for (&v, &s) in x.iter().zip(segments) {
            max[s] = max[s].max(v);
        }
        let mut denom = vec![0.0; n_segments];
        let mut out: Vec<f64> = x
            .iter()
            .zip(segments)
            .map(|(&v, &s)| {
                let e = (v - max[s]).exp();
                denom[s] += e;
                e
            })
            .collect();
        for (o, &s) in out.iter_mut().zip(segments) {
            *o /= denom[s];
        }
        let rows = out.len();
        Ok(self.push(
            Op::SegmentSoftmax {
                input: a,
                segments: segments.to_vec(),
            },
            DenseMatrix::from_vec(rows, 1, out),
        ))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var, AutogradError> {
        let Some(&first) = parts.first() else {
            return Err(shape_err("concat_rows", "no inputs".into()));
        };
        let cols = self.value(first).cols();
        let mut values = Vec::new();
        let mut rows = 0;
        for &p in parts {
            let pv = self.value(p);
            if pv.cols() != cols {
                return Err(shape_err(
                    "concat_rows",
                    format!("column mismatch {} vs {}", pv.cols(), cols),
                ));
            }
            rows += pv.rows();
            values.extend_from_slice(pv.values());
        }
        Ok(self.push(
            Op::ConcatRows(parts.to_vec()),
            DenseMatrix::from_vec(rows, cols, values),
        ))
    }

    pub fn gather_rows(&mut self, a: Var, index: &[usize]) -> Result<Var, AutogradError> {
        let av = self.value(a);
        if let Some(&bad) = index.iter().find(|&&i| i >= av.rows()) {
            return Err(shape_err(
                "gather_rows",
                format!("row {bad} out of range for {:?}", av.shape()),
            ));
        }
        let mut values = Vec::with_capacity(index.len() * av.cols());
        for &i in index {
            values.extend_from_slice(av.row(i));
        }
        let out = DenseMatrix::from_vec(index.len(), av.cols(), values);
        Ok(self.push(
            Op::GatherRows {
                input: a,
                index: index.to_vec(),
            },
            out,
        ))
    }

    /// Row-wise inner products: `n × c`, `n × c` → `n × 1`.
    pub fn row_inner_product(&mut self, a: Var, b: Var) -> Result<Var, AutogradError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(shape_err(
                "row_inner_product",
                format!("{:?} · {:?}", av.shape(), bv.shape()),
            ));
        }
        let out: Vec<f64> = (0..av.rows()).map(|r| dot(av.row(r), bv.row(r))).collect();
        let rows = out.len();
        Ok(self.push(Op::RowInner(a, b), DenseMatrix::from_vec(rows, 1, out)))
    }

    /// Scales row `i` of `a` by `w[i]`, with `w` an `n × 1` column.
    pub fn mul_rows(&mut self, a: Var, w: Var) -> Result<Var, AutogradError> {
        let (av, wv) = (self.value(a), self.value(w));
        if wv.cols() != 1 || wv.rows() != av.rows() {
            return Err(shape_err(
                "mul_rows",
                format!("{:?} scaled by {:?}", av.shape(), wv.shape()),
            ));
        }
        let mut out = av.clone();
        for r in 0..out.rows() {
            let f = wv.values()[r];
            out.row_mut(r).iter_mut().for_each(|v| *v *= f);
        }
        Ok(self.push(Op::MulRows(a, w), out))
    }

    /// Inverted dropout. Identity (no tape node) outside training or when `p == 0`.
    pub fn dropout<R: Rng + ?Sized>(&mut self, a: Var, p: f64, train: bool, rng: &mut R) -> Var {
        if !train || p <= 0.0 {
            return a;
        }
        let keep = 1.0 - p;
        let av = self.value(a);
        let mask: Vec<f64> = (0..av.len())
            .map(|_| {
                if rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        let out = DenseMatrix::from_vec(
            av.rows(),
            av.cols(),
            av.values().iter().zip(&mask).map(|(v, m)| v * m).collect(),
        );
        self.push(Op::Dropout { input: a, mask }, out)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).values().iter().sum();
        self.push(Op::Sum(a), DenseMatrix::scalar(s))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let av = self.value(a);
        let s = av.values().iter().sum::<f64>() / av.len().max(1) as f64;
        self.push(Op::Mean(a), DenseMatrix::scalar(s))
    }

    /// Reverse sweep from a `1 × 1` loss; returns gradients of every
    /// [`Tape::param`] leaf reachable from it.
    pub fn backward(&self, loss: Var) -> Result<Gradients, AutogradError> {
        let shape = self.shape(loss);
        if shape != (1, 1) {
            return Err(AutogradError::NonScalarLoss(shape));
        }
        let mut grads: Vec<Option<DenseMatrix>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(DenseMatrix::scalar(1.0));
        let mut out = Gradients::default();

        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            match &node.op {
                Op::Constant => {}
                Op::Param(pid) => out.accumulate(*pid, g),
                Op::MatMul(a, b) => {
                    let da = g.matmul_t(self.value(*b));
                    let db = self.value(*a).t_matmul(&g);
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::MatMulT(a, b) => {
                    let da = g.matmul(self.value(*b));
                    let db = g.t_matmul(self.value(*a));
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, g.clone());
                    acc(&mut grads, *b, g);
                }
                Op::AddRow(a, b) => {
                    let mut db = DenseMatrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (d, v) in db.row_mut(0).iter_mut().zip(g.row(r)) {
                            *d += v;
                        }
                    }
                    acc(&mut grads, *a, g);
                    acc(&mut grads, *b, db);
                }
                Op::Scale(a, f) => acc(&mut grads, *a, g.map(|v| v * f)),
                Op::AddScalar(a) => acc(&mut grads, *a, g),
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let mut d = g;
                    for (dv, xv) in d.values_mut().iter_mut().zip(x.values()) {
                        if *xv <= 0.0 {
                            *dv = 0.0;
                        }
                    }
                    acc(&mut grads, *a, d);
                }
                Op::Tanh(a) => {
                    let mut d = g;
                    for (dv, y) in d.values_mut().iter_mut().zip(node.value.values()) {
                        *dv *= 1.0 - y * y;
                    }
                    acc(&mut grads, *a, d);
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut d = g;
                    for r in 0..d.rows() {
                        let yr = y.row(r);
                        let s = dot(d.row(r), yr);
                        for (dv, yv) in d.row_mut(r).iter_mut().zip(yr) {
                            *dv = yv * (*dv - s);
                        }
                    }
                    acc(&mut grads, *a, d);
                }
                Op::SegmentMean {
                    input,
                    segments,
                    counts,
                } => {
                    let cols = g.cols();
                    let mut d = DenseMatrix::zeros(segments.len(), cols);
                    for (r, &s) in segments.iter().enumerate() {
                        let inv = 1.0 / counts[s] as f64;
                        for (dv, gv) in d.row_mut(r).iter_mut().zip(g.row(s)) {
                            *dv = gv * inv;
                        }
                    }
                    acc(&mut grads, *input, d);
                }
                Op::SegmentSum { input, segments } => {
                    let mut d = DenseMatrix::zeros(segments.len(), g.cols());
                    for (r, &s) in segments.iter().enumerate() {
                        d.row_mut(r).copy_from_slice(g.row(s));
                    }
                    acc(&mut grads, *input, d);
                }
                Op::SegmentSoftmax { input, segments } => {
                    let y = node.value.values();
                    let gv = g.values();
                    let n_seg = segments.iter().max().map_or(0, |m| m + 1);
                    let mut s = vec![0.0; n_seg];
                    for ((&gi, &yi), &seg) in gv.iter().zip(y).zip(segments) {
                        s[seg] += gi * yi;
                    }
                    let d: Vec<f64> = gv
                        .iter()
                        .zip(y)
                        .zip(segments)
                        .map(|((&gi, &yi), &seg)| yi * (gi - s[seg]))
                        .collect();
                    let rows = d.len();
                    acc(&mut grads, *input, DenseMatrix::from_vec(rows, 1, d));
                }
                Op::ConcatRows(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let rows = self.value(p).rows();
                        let cols = g.cols();
                        let slice = g.values()[offset * cols..(offset + rows) * cols].to_vec();
                        acc(&mut grads, p, DenseMatrix::from_vec(rows, cols, slice));
                        offset += rows;
                    }
                }
                Op::GatherRows { input, index } => {
                    let (rows, cols) = self.shape(*input);
                    let mut d = DenseMatrix::zeros(rows, cols);
                    for (r, &i) in index.iter().enumerate() {
                        for (dv, gv) in d.row_mut(i).iter_mut().zip(g.row(r)) {
                            *dv += gv;
                        }
                    }
                    acc(&mut grads, *input, d);
                }
                Op::RowInner(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let mut da = bv.clone();
                    let mut db = av.clone();
                    for r in 0..av.rows() {
                        let f = g.values()[r];
                        da.row_mut(r).iter_mut().for_each(|v| *v *= f);
                        db.row_mut(r).iter_mut().for_each(|v| *v *= f);
                    }
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *b, db);
                }
                Op::MulRows(a, w) => {
                    let (av, wv) = (self.value(*a), self.value(*w));
                    let mut da = g.clone();
                    let mut dw = Vec::with_capacity(av.rows());
                    for r in 0..av.rows() {
                        let f = wv.values()[r];
                        da.row_mut(r).iter_mut().for_each(|v| *v *= f);
                        dw.push(dot(g.row(r), av.row(r)));
                    }
                    let rows = dw.len();
                    acc(&mut grads, *a, da);
                    acc(&mut grads, *w, DenseMatrix::from_vec(rows, 1, dw));
                }
                Op::Dropout { input, mask } => {
                    let mut d = g;
                    for (dv, m) in d.values_mut().iter_mut().zip(mask) {
                        *dv *= m;
                    }
                    acc(&mut grads, *input, d);
                }
                Op::Sum(a) => {
                    let (r, c) = self.shape(*a);
                    acc(&mut grads, *a, DenseMatrix::filled(r, c, g.values()[0]));
                }
                Op::Mean(a) => {
                    let (r, c) = self.shape(*a);
                    let n = (r * c).max(1) as f64;
                    acc(&mut grads, *a, DenseMatrix::filled(r, c, g.values()[0] / n));
                }
            }
        }
        Ok(out)
    }
}

fn acc(grads: &mut [Option<DenseMatrix>], v: Var, g: DenseMatrix) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

pub(crate) fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in row.iter_mut() {
        *v /= total;
    }
}
