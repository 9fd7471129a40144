//! Op recording and reverse-mode gradient propagation.

use std::collections::HashMap;

use super::{Tensor, TensorError};

/// One recorded operation: input handles, the output handle, and enough
/// metadata to replay its local gradient rule.
enum Op {
    Matmul { a: Tensor, b: Tensor, out: Tensor },
    Add { a: Tensor, b: Tensor, out: Tensor },
    Sub { a: Tensor, b: Tensor, out: Tensor },
    Mul { a: Tensor, b: Tensor, out: Tensor },
    /// out[i][j] = m[i][j] + v[j]
    AddRow { m: Tensor, v: Tensor, out: Tensor },
    /// out[i][j] = m[i][j] * v[j]
    MulRow { m: Tensor, v: Tensor, out: Tensor },
    /// out = x + s, s a 1-element tensor broadcast over x
    AddScalarT { x: Tensor, s: Tensor, out: Tensor },
    /// out = mul * x + add (constants carry no gradient)
    Affine { x: Tensor, mul: f64, out: Tensor },
    Tanh { x: Tensor, out: Tensor },
    Sigmoid { x: Tensor, out: Tensor },
    Exp { x: Tensor, out: Tensor },
    Log { x: Tensor, out: Tensor },
    Clamp { x: Tensor, lo: f64, hi: f64, out: Tensor },
    Minimum { a: Tensor, b: Tensor, out: Tensor },
    Sum { x: Tensor, out: Tensor },
    Mean { x: Tensor, out: Tensor },
    SumAxis { x: Tensor, axis: usize, out: Tensor },
    Reshape { x: Tensor, out: Tensor },
    Stack { rows: Vec<Tensor>, out: Tensor },
}

impl Op {
    fn out(&self) -> &Tensor {
        match self {
            Op::Matmul { out, .. }
            | Op::Add { out, .. }
            | Op::Sub { out, .. }
            | Op::Mul { out, .. }
            | Op::AddRow { out, .. }
            | Op::MulRow { out, .. }
            | Op::AddScalarT { out, .. }
            | Op::Affine { out, .. }
            | Op::Tanh { out, .. }
            | Op::Sigmoid { out, .. }
            | Op::Exp { out, .. }
            | Op::Log { out, .. }
            | Op::Clamp { out, .. }
            | Op::Minimum { out, .. }
            | Op::Sum { out, .. }
            | Op::Mean { out, .. }
            | Op::SumAxis { out, .. }
            | Op::Reshape { out, .. }
            | Op::Stack { out, .. } => out,
        }
    }
}

/// Traversal-local gradient buffers, keyed by tensor identity. Buffers are
/// flushed into `Tensor::grad` once the walk finishes, so repeated backward
/// calls accumulate (sum) into the stored gradients.
struct GradStore(HashMap<usize, Vec<f64>>);

impl GradStore {
    fn take(&mut self, t: &Tensor) -> Option<Vec<f64>> {
        self.0.remove(&t.id())
    }

    fn entry(&mut self, t: &Tensor) -> &mut Vec<f64> {
        self.0.entry(t.id()).or_insert_with(|| vec![0.0; t.numel()])
    }

    fn add_slice(&mut self, t: &Tensor, contrib: &[f64]) {
        let buf = self.entry(t);
        for (b, c) in buf.iter_mut().zip(contrib) {
            *b += c;
        }
    }
}

/// Records ops during a forward pass. Nodes are appended in execution order,
/// which is already topological for define-by-run graphs; backward walks them
/// once, in reverse. Single-threaded by construction.
pub struct Tape {
    nodes: Vec<Op>,
    recording: bool,
}

impl Tape {
    /// A tape that records gradient rules for ops touching grad-requiring tensors.
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            recording: true,
        }
    }

    /// A tape that records nothing; use for rollouts and evaluation.
    pub fn no_grad() -> Self {
        Tape {
            nodes: Vec::new(),
            recording: false,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn track(&self, inputs: &[&Tensor]) -> bool {
        self.recording && inputs.iter().any(|t| t.requires_grad())
    }

    fn push(&mut self, op: Op) {
        self.nodes.push(op);
    }

    // ── Linear algebra ──────────────────────────────────────────────

    pub fn matmul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        let (sa, sb) = (a.shape(), b.shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(TensorError::MatmulMismatch { lhs: sa, rhs: sb });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        {
            let ad = a.data();
            let bd = b.data();
            for i in 0..m {
                let arow = &ad[i * k..(i + 1) * k];
                let orow = &mut out[i * n..(i + 1) * n];
                for (p, &aip) in arow.iter().enumerate() {
                    let brow = &bd[p * n..(p + 1) * n];
                    for (o, &bpj) in orow.iter_mut().zip(brow) {
                        *o += aip * bpj;
                    }
                }
            }
        }
        let track = self.track(&[a, b]);
        let out = Tensor::result(vec![m, n], out, track);
        if track {
            self.push(Op::Matmul {
                a: a.clone(),
                b: b.clone(),
                out: out.clone(),
            });
        }
        Ok(out)
    }

    // ── Elementwise binary ──────────────────────────────────────────

    fn zip_op(
        &mut self,
        name: &'static str,
        a: &Tensor,
        b: &Tensor,
        f: impl Fn(f64, f64) -> f64,
        make: impl Fn(Tensor, Tensor, Tensor) -> Op,
    ) -> Result<Tensor, TensorError> {
        if a.shape() != b.shape() {
            return Err(TensorError::ShapeMismatch {
                op: name,
                lhs: a.shape(),
                rhs: b.shape(),
            });
        }
        let data: Vec<f64> = a.data().iter().zip(b.data().iter()).map(|(&x, &y)| f(x, y)).collect();
        let track = self.track(&[a, b]);
        let out = Tensor::result(a.shape(), data, track);
        if track {
            self.push(make(a.clone(), b.clone(), out.clone()));
        }
        Ok(out)
    }

    pub fn add(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_op("add", a, b, |x, y| x + y, |a, b, out| Op::Add { a, b, out })
    }

    pub fn sub(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_op("sub", a, b, |x, y| x - y, |a, b, out| Op::Sub { a, b, out })
    }

    pub fn mul(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_op("mul", a, b, |x, y| x * y, |a, b, out| Op::Mul { a, b, out })
    }

    pub fn minimum(&mut self, a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
        self.zip_op(
            "minimum",
            a,
            b,
            |x, y| if x <= y { x } else { y },
            |a, b, out| Op::Minimum { a, b, out },
        )
    }

    // ── Row broadcasts (matrix op vector-per-column) ────────────────

    fn row_op(
        &mut self,
        name: &'static str,
        m: &Tensor,
        v: &Tensor,
        f: impl Fn(f64, f64) -> f64,
        make: impl Fn(Tensor, Tensor, Tensor) -> Op,
    ) -> Result<Tensor, TensorError> {
        let (sm, sv) = (m.shape(), v.shape());
        if sm.len() != 2 || sv.len() != 1 || sm[1] != sv[0] {
            return Err(TensorError::ShapeMismatch {
                op: name,
                lhs: sm,
                rhs: sv,
            });
        }
        let cols = sm[1];
        let vd = v.data();
        let data: Vec<f64> = m
            .data()
            .iter()
            .enumerate()
            .map(|(idx, &x)| f(x, vd[idx % cols]))
            .collect();
        drop(vd);
        let track = self.track(&[m, v]);
        let out = Tensor::result(sm, data, track);
        if track {
            self.push(make(m.clone(), v.clone(), out.clone()));
        }
        Ok(out)
    }

    /// Add a length-n vector to every row of an m-by-n matrix (bias add).
    pub fn add_row(&mut self, m: &Tensor, v: &Tensor) -> Result<Tensor, TensorError> {
        self.row_op("add_row", m, v, |x, y| x + y, |m, v, out| Op::AddRow { m, v, out })
    }

    /// Multiply every row of an m-by-n matrix by a length-n vector.
    pub fn mul_row(&mut self, m: &Tensor, v: &Tensor) -> Result<Tensor, TensorError> {
        self.row_op("mul_row", m, v, |x, y| x * y, |m, v, out| Op::MulRow { m, v, out })
    }

    /// Broadcast-add a 1-element tensor to every entry of `x`.
    pub fn add_scalar_t(&mut self, x: &Tensor, s: &Tensor) -> Result<Tensor, TensorError> {
        if s.numel() != 1 {
            return Err(TensorError::ShapeMismatch {
                op: "add_scalar_t",
                lhs: x.shape(),
                rhs: s.shape(),
            });
        }
        let sv = s.item();
        let data: Vec<f64> = x.data().iter().map(|&v| v + sv).collect();
        let track = self.track(&[x, s]);
        let out = Tensor::result(x.shape(), data, track);
        if track {
            self.push(Op::AddScalarT {
                x: x.clone(),
                s: s.clone(),
                out: out.clone(),
            });
        }
        Ok(out)
    }

    // ── Elementwise unary ───────────────────────────────────────────

    fn map_op(
        &mut self,
        x: &Tensor,
        f: impl Fn(f64) -> f64,
        make: impl Fn(Tensor, Tensor) -> Op,
    ) -> Tensor {
        let data: Vec<f64> = x.data().iter().map(|&v| f(v)).collect();
        let track = self.track(&[x]);
        let out = Tensor::result(x.shape(), data, track);
        if track {
            self.push(make(x.clone(), out.clone()));
        }
        out
    }

    pub fn tanh(&mut self, x: &Tensor) -> Tensor {
        self.map_op(x, f64::tanh, |x, out| Op::Tanh { x, out })
    }

    pub fn sigmoid(&mut self, x: &Tensor) -> Tensor {
        self.map_op(x, |v| 1.0 / (1.0 + (-v).exp()), |x, out| Op::Sigmoid { x, out })
    }

    pub fn exp(&mut self, x: &Tensor) -> Tensor {
        self.map_op(x, f64::exp, |x, out| Op::Exp { x, out })
    }

    pub fn log(&mut self, x: &Tensor) -> Result<Tensor, TensorError> {
        if let Some(&bad) = x.data().iter().find(|v| **v <= 0.0) {
            return Err(TensorError::LogDomain { value: bad });
        }
        Ok(self.map_op(x, f64::ln, |x, out| Op::Log { x, out }))
    }

    /// out = mul * x + add; the constants carry no gradient.
    pub fn affine(&mut self, x: &Tensor, mul: f64, add: f64) -> Tensor {
        self.map_op(x, |v| mul * v + add, |x, out| Op::Affine { x, mul, out })
    }

    pub fn neg(&mut self, x: &Tensor) -> Tensor {
        self.affine(x, -1.0, 0.0)
    }

    pub fn clamp(&mut self, x: &Tensor, lo: f64, hi: f64) -> Tensor {
        self.map_op(x, |v| v.clamp(lo, hi), |x, out| Op::Clamp { x, lo, hi, out })
    }

    // ── Reductions ──────────────────────────────────────────────────

    pub fn sum(&mut self, x: &Tensor) -> Tensor {
        let total: f64 = x.data().iter().sum();
        let track = self.track(&[x]);
        let out = Tensor::result(vec![1], vec![total], track);
        if track {
            self.push(Op::Sum {
                x: x.clone(),
                out: out.clone(),
            });
        }
        out
    }

    pub fn mean(&mut self, x: &Tensor) -> Tensor {
        let n = x.numel() as f64;
        let total: f64 = x.data().iter().sum();
        let track = self.track(&[x]);
        let out = Tensor::result(vec![1], vec![total / n], track);
        if track {
            self.push(Op::Mean {
                x: x.clone(),
                out: out.clone(),
            });
        }
        out
    }

    pub fn sum_axis(&mut self, x: &Tensor, axis: usize) -> Result<Tensor, TensorError> {
        let shape = x.shape();
        if axis >= shape.len() {
            return Err(TensorError::InvalidAxis {
                axis,
                rank: shape.len(),
            });
        }
        let outer: usize = shape[..axis].iter().product();
        let len_axis = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let mut out_shape: Vec<usize> = shape[..axis].to_vec();
        out_shape.extend_from_slice(&shape[axis + 1..]);
        if out_shape.is_empty() {
            out_shape.push(1);
        }
        let mut data = vec![0.0; outer * inner];
        {
            let xd = x.data();
            for o in 0..outer {
                for a in 0..len_axis {
                    let base = (o * len_axis + a) * inner;
                    let dst = &mut data[o * inner..(o + 1) * inner];
                    for (d, &v) in dst.iter_mut().zip(&xd[base..base + inner]) {
                        *d += v;
                    }
                }
            }
        }
        let track = self.track(&[x]);
        let out = Tensor::result(out_shape, data, track);
        if track {
            self.push(Op::SumAxis {
                x: x.clone(),
                axis,
                out: out.clone(),
            });
        }
        Ok(out)
    }

    pub fn mean_axis(&mut self, x: &Tensor, axis: usize) -> Result<Tensor, TensorError> {
        let shape = x.shape();
        if axis >= shape.len() {
            return Err(TensorError::InvalidAxis {
                axis,
                rank: shape.len(),
            });
        }
        let n = shape[axis] as f64;
        let s = self.sum_axis(x, axis)?;
        Ok(self.affine(&s, 1.0 / n, 0.0))
    }

    // ── Shape plumbing ──────────────────────────────────────────────

    pub fn reshape(&mut self, x: &Tensor, shape: Vec<usize>) -> Result<Tensor, TensorError> {
        let numel: usize = shape.iter().product();
        if numel != x.numel() {
            return Err(TensorError::DataShape {
                len: x.numel(),
                shape,
            });
        }
        let track = self.track(&[x]);
        let out = Tensor::result(shape, x.to_vec(), track);
        if track {
            self.push(Op::Reshape {
                x: x.clone(),
                out: out.clone(),
            });
        }
        Ok(out)
    }

    /// Stack equal-length rank-1 tensors into a [rows.len(), n] matrix.
    pub fn stack(&mut self, rows: &[Tensor]) -> Result<Tensor, TensorError> {
        let n = match rows.first() {
            Some(r) if r.rank() == 1 => r.numel(),
            _ => return Err(TensorError::BadStack),
        };
        if rows.iter().any(|r| r.rank() != 1 || r.numel() != n) {
            return Err(TensorError::BadStack);
        }
        let mut data = Vec::with_capacity(rows.len() * n);
        for r in rows {
            data.extend_from_slice(&r.data());
        }
        let track = self.recording && rows.iter().any(|r| r.requires_grad());
        let out = Tensor::result(vec![rows.len(), n], data, track);
        if track {
            self.push(Op::Stack {
                rows: rows.to_vec(),
                out: out.clone(),
            });
        }
        Ok(out)
    }

    // ── Backward ────────────────────────────────────────────────────

    /// Reverse accumulation from a scalar loss. Gradients are summed into the
    /// `grad` field of every grad-requiring tensor the tape touched.
    pub fn backward(&self, loss: &Tensor) -> Result<(), TensorError> {
        if loss.numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                numel: loss.numel(),
            });
        }
        if !self.nodes.iter().any(|n| n.out().id() == loss.id()) {
            return Err(TensorError::LossNotOnTape);
        }
        let mut store = GradStore(HashMap::new());
        store.add_slice(loss, &[1.0]);

        for node in self.nodes.iter().rev() {
            let g = match store.take(node.out()) {
                Some(g) => g,
                None => continue,
            };
            // Flush into the output tensor before propagating so every
            // grad-requiring tensor, intermediate or leaf, ends up populated.
            if node.out().requires_grad() {
                node.out().accumulate_grad(&g);
            }
            propagate(node, &g, &mut store);
        }
        // Whatever remains in the store belongs to leaves (no producing node).
        for (_, (t, buf)) in collect_leaves(&self.nodes, &mut store) {
            if t.requires_grad() {
                t.accumulate_grad(&buf);
            }
        }
        Ok(())
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// Pull remaining buffers out of the store keyed by the leaf tensors that own
/// them. Node inputs are scanned so we can map ids back to handles.
fn collect_leaves(
    nodes: &[Op],
    store: &mut GradStore,
) -> HashMap<usize, (Tensor, Vec<f64>)> {
    let mut leaves = HashMap::new();
    let mut visit = |t: &Tensor| {
        if let Some(buf) = store.0.remove(&t.id()) {
            leaves.insert(t.id(), (t.clone(), buf));
        }
    };
    for node in nodes {
        match node {
            Op::Matmul { a, b, .. }
            | Op::Add { a, b, .. }
            | Op::Sub { a, b, .. }
            | Op::Mul { a, b, .. }
            | Op::Minimum { a, b, .. } => {
                visit(a);
                visit(b);
            }
            Op::AddRow { m, v, .. } | Op::MulRow { m, v, .. } => {
                visit(m);
                visit(v);
            }
            Op::AddScalarT { x, s, .. } => {
                visit(x);
                visit(s);
            }
            Op::Affine { x, .. }
            | Op::Tanh { x, .. }
            | Op::Sigmoid { x, .. }
            | Op::Exp { x, .. }
            | Op::Log { x, .. }
            | Op::Clamp { x, .. }
            | Op::Sum { x, .. }
            | Op::Mean { x, .. }
            | Op::SumAxis { x, .. }
            | Op::Reshape { x, .. } => visit(x),
            Op::Stack { rows, .. } => rows.iter().for_each(&mut visit),
        }
    }
    leaves
}

fn propagate(node: &Op, g: &[f64], store: &mut GradStore) {
    match node {
        Op::Matmul { a, b, .. } => {
            let (sa, sb) = (a.shape(), b.shape());
            let (m, k, n) = (sa[0], sa[1], sb[1]);
            if a.requires_grad() {
                let bd = b.data();
                let da = store.entry(a);
                for i in 0..m {
                    let grow = &g[i * n..(i + 1) * n];
                    let darow = &mut da[i * k..(i + 1) * k];
                    for (p, dap) in darow.iter_mut().enumerate() {
                        let brow = &bd[p * n..(p + 1) * n];
                        *dap += grow.iter().zip(brow).map(|(&gv, &bv)| gv * bv).sum::<f64>();
                    }
                }
            }
            if b.requires_grad() {
                let ad = a.data();
                let db = store.entry(b);
                for i in 0..m {
                    let grow = &g[i * n..(i + 1) * n];
                    let arow = &ad[i * k..(i + 1) * k];
                    for (p, &aip) in arow.iter().enumerate() {
                        let dbrow = &mut db[p * n..(p + 1) * n];
                        for (d, &gv) in dbrow.iter_mut().zip(grow) {
                            *d += aip * gv;
                        }
                    }
                }
            }
        }
        Op::Add { a, b, .. } => {
            if a.requires_grad() {
                store.add_slice(a, g);
            }
            if b.requires_grad() {
                store.add_slice(b, g);
            }
        }
        Op::Sub { a, b, .. } => {
            if a.requires_grad() {
                store.add_slice(a, g);
            }
            if b.requires_grad() {
                let db = store.entry(b);
                for (d, &gv) in db.iter_mut().zip(g) {
                    *d -= gv;
                }
            }
        }
        Op::Mul { a, b, .. } => {
            if a.requires_grad() {
                let bd = b.data();
                let da = store.entry(a);
                for ((d, &gv), &bv) in da.iter_mut().zip(g).zip(bd.iter()) {
                    *d += gv * bv;
                }
            }
            if b.requires_grad() {
                let ad = a.data();
                let db = store.entry(b);
                for ((d, &gv), &av) in db.iter_mut().zip(g).zip(ad.iter()) {
                    *d += gv * av;
                }
            }
        }
        Op::Minimum { a, b, .. } => {
            let (ad, bd) = (a.data(), b.data());
            if a.requires_grad() {
                let da = store.entry(a);
                for (i, d) in da.iter_mut().enumerate() {
                    if ad[i] <= bd[i] {
                        *d += g[i];
                    }
                }
            }
            if b.requires_grad() {
                let db = store.entry(b);
                for (i, d) in db.iter_mut().enumerate() {
                    if bd[i] < ad[i] {
                        *d += g[i];
                    }
                }
            }
        }
        Op::AddRow { m, v, .. } => {
            let cols = v.numel();
            if m.requires_grad() {
                store.add_slice(m, g);
            }
            if v.requires_grad() {
                let dv = store.entry(v);
                for (i, &gv) in g.iter().enumerate() {
                    dv[i % cols] += gv;
                }
            }
        }
        Op::MulRow { m, v, .. } => {
            let cols = v.numel();
            if m.requires_grad() {
                let vd = v.data();
                let dm = store.entry(m);
                for (i, (d, &gv)) in dm.iter_mut().zip(g).enumerate() {
                    *d += gv * vd[i % cols];
                }
            }
            if v.requires_grad() {
                let md = m.data();
                let dv = store.entry(v);
                for (i, &gv) in g.iter().enumerate() {
                    dv[i % cols] += gv * md[i];
                }
            }
        }
        Op::AddScalarT { x, s, .. } => {
            if x.requires_grad() {
                store.add_slice(x, g);
            }
            if s.requires_grad() {
                store.entry(s)[0] += g.iter().sum::<f64>();
            }
        }
        Op::Affine { x, mul, .. } => {
            if x.requires_grad() {
                let dx = store.entry(x);
                for (d, &gv) in dx.iter_mut().zip(g) {
                    *d += mul * gv;
                }
            }
        }
        Op::Tanh { x, out } => {
            if x.requires_grad() {
                let od = out.data();
                let dx = store.entry(x);
                for ((d, &gv), &y) in dx.iter_mut().zip(g).zip(od.iter()) {
                    *d += gv * (1.0 - y * y);
                }
            }
        }
        Op::Sigmoid { x, out } => {
            if x.requires_grad() {
                let od = out.data();
                let dx = store.entry(x);
                for ((d, &gv), &y) in dx.iter_mut().zip(g).zip(od.iter()) {
                    *d += gv * y * (1.0 - y);
                }
            }
        }
        Op::Exp { x, out } => {
            if x.requires_grad() {
                let od = out.data();
                let dx = store.entry(x);
                for ((d, &gv), &y) in dx.iter_mut().zip(g).zip(od.iter()) {
                    *d += gv * y;
                }
            }
        }
        Op::Log { x, .. } => {
            if x.requires_grad() {
                let xd = x.data();
                let dx = store.entry(x);
                for ((d, &gv), &v) in dx.iter_mut().zip(g).zip(xd.iter()) {
                    *d += gv / v;
                }
            }
        }
        Op::Clamp { x, lo, hi, .. } => {
            if x.requires_grad() {
                let xd = x.data();
                let dx = store.entry(x);
                for ((d, &gv), &v) in dx.iter_mut().zip(g).zip(xd.iter()) {
                    if v >= *lo && v <= *hi {
                        *d += gv;
                    }
                }
            }
        }
        Op::Sum { x, .. } => {
            if x.requires_grad() {
                let dx = store.entry(x);
                for d in dx.iter_mut() {
                    *d += g[0];
                }
            }
        }
        Op::Mean { x, .. } => {
            if x.requires_grad() {
                let scale = 1.0 / x.numel() as f64;
                let dx = store.entry(x);
                for d in dx.iter_mut() {
                    *d += g[0] * scale;
                }
            }
        }
        Op::SumAxis { x, axis, .. } => {
            if x.requires_grad() {
                let shape = x.shape();
                let outer: usize = shape[..*axis].iter().product();
                let len_axis = shape[*axis];
                let inner: usize = shape[*axis + 1..].iter().product();
                let dx = store.entry(x);
                for o in 0..outer {
                    for a in 0..len_axis {
                        let base = (o * len_axis + a) * inner;
                        let gsl = &g[o * inner..(o + 1) * inner];
                        for (d, &gv) in dx[base..base + inner].iter_mut().zip(gsl) {
                            *d += gv;
                        }
                    }
                }
            }
        }
        Op::Reshape { x, .. } => {
            if x.requires_grad() {
                store.add_slice(x, g);
            }
        }
        Op::Stack { rows, .. } => {
            let n = rows[0].numel();
            for (i, r) in rows.iter().enumerate() {
                if r.requires_grad() {
                    store.add_slice(r, &g[i * n..(i + 1) * n]);
                }
            }
        }
    }
}
