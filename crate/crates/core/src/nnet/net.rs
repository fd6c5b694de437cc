use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use crate::geometry::Rng;

use super::graph::GraphBatch;
use super::NnetError;

/// Layer widths. The input and output are scalars; `encoder` lists hidden
/// widths after the input and its last entry is the processor width.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NetConfig {
    pub encoder: Vec<usize>,
    pub gnn_layers: usize,
    pub decoder: Vec<usize>,
}

impl NetConfig {
    /// 1393 learnables.
    pub fn small() -> Self {
        Self { encoder: vec![8, 16], gnn_layers: 2, decoder: vec![8] }
    }

    /// 5345 learnables.
    pub fn medium() -> Self {
        Self { encoder: vec![16, 32], gnn_layers: 2, decoder: vec![16] }
    }

    /// 22491 learnables, six dense layers and three processor blocks.
    pub fn large() -> Self {
        Self { encoder: vec![8, 32, 56], gnn_layers: 3, decoder: vec![18, 8] }
    }

    pub fn width(&self) -> usize {
        *self.encoder.last().expect("encoder needs at least one layer")
    }

    /// (in, out) of every linear map in evaluation order.
    fn shapes(&self) -> Vec<(usize, usize)> {
        let mut s = Vec::new();
        let mut prev = 1;
        for &w in &self.encoder {
            s.push((prev, w));
            prev = w;
        }
        for _ in 0..self.gnn_layers {
            s.push((prev, prev));
            s.push((prev, prev));
        }
        for &w in self.decoder.iter().chain(std::iter::once(&1)) {
            s.push((prev, w));
            prev = w;
        }
        s
    }

    pub fn learnables(&self) -> usize {
        self.shapes().iter().map(|(i, o)| i * o + o).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// out × in
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Linear {
    fn zeros(inp: usize, out: usize) -> Self {
        Self { w: DMatrix::zeros(out, inp), b: DVector::zeros(out) }
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = x * self.w.transpose();
        for mut row in y.row_iter_mut() {
            row += self.b.transpose();
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetParams {
    pub config: NetConfig,
    pub layers: Vec<Linear>,
    /// Normalized size predicted for nodes without edges.
    pub fallback: f64,
}

fn relu(z: &DMatrix<f64>) -> DMatrix<f64> {
    z.map(|v| v.max(0.0))
}

fn relu_back(dh: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    dh.zip_map(z, |d, v| if v > 0.0 { d } else { 0.0 })
}

/// Per-channel aggregation: e_max · Σ_j |a_i − a_j| / ‖x_i − x_j‖.
fn message(g: &GraphBatch, a: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, c) = a.shape();
    let mut m = DMatrix::zeros(n, c);
    for i in 0..n {
        for &(j, d) in &g.neighbours[i] {
            let w = g.e_max / d;
            for ch in 0..c {
                m[(i, ch)] += w * (a[(i, ch)] - a[(j, ch)]).abs();
            }
        }
    }
    m
}

fn message_back(g: &GraphBatch, a: &DMatrix<f64>, dm: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, c) = a.shape();
    let mut da = DMatrix::zeros(n, c);
    for i in 0..n {
        for &(j, d) in &g.neighbours[i] {
            let w = g.e_max / d;
            for ch in 0..c {
                let diff = a[(i, ch)] - a[(j, ch)];
                // subgradient 0 at a kink
                let s = if diff > 0.0 { 1.0 } else if diff < 0.0 { -1.0 } else { 0.0 };
                let t = w * s * dm[(i, ch)];
                da[(i, ch)] += t;
                da[(j, ch)] -= t;
            }
        }
    }
    da
}

/// Intermediate values kept for the backward pass.
struct Tape {
    /// Input to each linear map.
    inputs: Vec<DMatrix<f64>>,
    /// Output of each linear map (pre-activation).
    outputs: Vec<DMatrix<f64>>,
}

const MAGIC: &[u8; 8] = b"LAMGNET\0";
const VERSION: u32 = 1;

impl NetParams {
    pub fn zeros(config: NetConfig) -> Self {
        let layers = config.shapes().into_iter().map(|(i, o)| Linear::zeros(i, o)).collect();
        Self { config, layers, fallback: 0.5 }
    }

    /// He-uniform weights, zero biases.
    pub fn init(config: NetConfig, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(config);
        for l in &mut p.layers {
            let bound = (6.0 / l.w.ncols() as f64).sqrt();
            for v in l.w.iter_mut() {
                *v = rng.range(-bound, bound);
            }
        }
        p
    }

    pub fn count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// All learnables, layer by layer: weights row-major, then biases.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.count());
        for l in &self.layers {
            for r in 0..l.w.nrows() {
                v.extend(l.w.row(r).iter());
            }
            v.extend(l.b.iter());
        }
        v
    }

    pub fn set_flat(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.count());
        let mut k = 0;
        for l in &mut self.layers {
            for r in 0..l.w.nrows() {
                for c in 0..l.w.ncols() {
                    l.w[(r, c)] = v[k];
                    k += 1;
                }
            }
            for b in l.b.iter_mut() {
                *b = v[k];
                k += 1;
            }
        }
    }

    fn run(&self, g: &GraphBatch) -> Result<(Vec<f64>, Tape), NnetError> {
        let n = g.len();
        let enc = self.config.encoder.len();
        let mut tape = Tape { inputs: Vec::new(), outputs: Vec::new() };
        let mut h = DMatrix::from_column_slice(n, 1, &g.values);
        let mut li = 0;
        let mut linear = |x: DMatrix<f64>, tape: &mut Tape| -> DMatrix<f64> {
            let y = self.layers[li].apply(&x);
            li += 1;
            tape.inputs.push(x);
            tape.outputs.push(y.clone());
            y
        };
        for _ in 0..enc {
            h = relu(&linear(h, &mut tape));
        }
        for _ in 0..self.config.gnn_layers {
            let a = linear(h, &mut tape);
            let m = message(g, &a);
            h = relu(&linear(m, &mut tape));
        }
        let dec = self.config.decoder.len();
        for d in 0..=dec {
            let z = linear(h, &mut tape);
            h = if d < dec { relu(&z) } else { z };
        }
        let out: Vec<f64> = h.column(0).iter().copied().collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(NnetError::TrainingDiverged("non-finite network output".into()));
        }
        Ok((out, tape))
    }

    /// Raw network output (normalized sizes, unclamped).
    pub fn forward(&self, g: &GraphBatch) -> Result<Vec<f64>, NnetError> {
        self.run(g).map(|(o, _)| o)
    }

    /// Normalized size prediction: clamped to [0, 1], isolated nodes take
    /// the fallback.
    pub fn predict(&self, g: &GraphBatch) -> Result<Vec<f64>, NnetError> {
        let mut s = self.forward(g)?;
        for v in &mut s {
            *v = v.clamp(0.0, 1.0);
        }
        for &i in &g.isolated {
            s[i] = self.fallback;
        }
        Ok(s)
    }

    /// Output and gradient of Σ_p dout[p] · out[p] with respect to every
    /// learnable, laid out like `layers`.
    pub fn backward(&self, g: &GraphBatch, dout: impl FnOnce(&[f64]) -> Vec<f64>) -> Result<(Vec<f64>, Vec<Linear>), NnetError> {
        let (out, tape) = self.run(g)?;
        let seed = dout(&out);
        let n = g.len();
        let mut grads: Vec<Linear> = self.layers.iter().map(|l| Linear::zeros(l.w.ncols(), l.w.nrows())).collect();
        let mut li = self.layers.len();
        let mut dh = DMatrix::from_column_slice(n, 1, &seed);
        let dec = self.config.decoder.len();
        for d in (0..=dec).rev() {
            let dz = if d < dec { relu_back(&dh, &tape.outputs[li - 1]) } else { dh };
            li -= 1;
            dh = self.linear_back(li, dz, &tape, &mut grads);
        }
        for _ in 0..self.config.gnn_layers {
            let dz = relu_back(&dh, &tape.outputs[li - 1]);
            li -= 1;
            let dm = self.linear_back(li, dz, &tape, &mut grads);
            let da = message_back(g, &tape.outputs[li - 1], &dm);
            li -= 1;
            dh = self.linear_back(li, da, &tape, &mut grads);
        }
        for _ in 0..self.config.encoder.len() {
            let dz = relu_back(&dh, &tape.outputs[li - 1]);
            li -= 1;
            dh = self.linear_back(li, dz, &tape, &mut grads);
        }
        Ok((out, grads))
    }

    /// Gradient of linear map `li` given dL/d(output); returns dL/d(input).
    fn linear_back(&self, li: usize, dz: DMatrix<f64>, tape: &Tape, grads: &mut [Linear]) -> DMatrix<f64> {
        grads[li].w = dz.transpose() * &tape.inputs[li];
        grads[li].b = dz.row_sum().transpose();
        dz * &self.layers[li].w
    }

    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        let u32s = |w: &mut dyn Write, v: u32| w.write_all(&v.to_le_bytes());
        u32s(&mut w, VERSION)?;
        u32s(&mut w, self.config.encoder.len() as u32)?;
        for &e in &self.config.encoder {
            u32s(&mut w, e as u32)?;
        }
        u32s(&mut w, self.config.gnn_layers as u32)?;
        u32s(&mut w, self.config.decoder.len() as u32)?;
        for &d in &self.config.decoder {
            u32s(&mut w, d as u32)?;
        }
        w.write_all(&self.fallback.to_le_bytes())?;
        for v in self.flat() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read(mut r: impl Read) -> Result<Self, NnetError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(NnetError::Format("bad magic".into()));
        }
        let mut u32r = || -> Result<u32, NnetError> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let version = u32r()?;
        if version != VERSION {
            return Err(NnetError::Format(format!("unsupported version {version}")));
        }
        let ne = u32r()? as usize;
        if ne == 0 || ne > 64 {
            return Err(NnetError::Format(format!("bad encoder depth {ne}")));
        }
        let encoder = (0..ne).map(|_| u32r().map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
        let gnn_layers = u32r()? as usize;
        let nd = u32r()? as usize;
        if nd > 64 {
            return Err(NnetError::Format(format!("bad decoder depth {nd}")));
        }
        let decoder = (0..nd).map(|_| u32r().map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
        let mut p = Self::zeros(NetConfig { encoder, gnn_layers, decoder });
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        p.fallback = f64::from_le_bytes(b);
        let mut v = Vec::with_capacity(p.count());
        for _ in 0..p.count() {
            r.read_exact(&mut b)?;
            v.push(f64::from_le_bytes(b));
        }
        p.set_flat(&v);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(NnetError::Format("non-finite parameter".into()));
        }
        Ok(p)
    }
}
