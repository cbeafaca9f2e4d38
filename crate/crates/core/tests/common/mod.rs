//! Independent reference computations shared by the integration tests and
//! the acceptance suite. Nothing here calls into the code under test.

#![allow(dead_code)]

use evonet::model::{EvoNet, Message, MessageKind};
use evonet::Tensor;
use nalgebra::{DMatrix, DVector};

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(t: &Tensor) -> Mat {
    (0..t.rows()).map(|r| (0..t.cols()).map(|c| t.get(r, c)).collect()).collect()
}

/// Solves `(I - d A^T) x = (1 - d) / n` where `A` is the row-stochastic
/// transition matrix and rows without out-mass jump uniformly.
pub fn pagerank_solve(m: &Mat, damping: f64) -> Vec<f64> {
    let n = m.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        let out: f64 = m[u].iter().sum();
        for v in 0..n {
            a[(u, v)] = if out > 0.0 { m[u][v] / out } else { 1.0 / n as f64 };
        }
    }
    let lhs = DMatrix::<f64>::identity(n, n) - a.transpose() * damping;
    let rhs = DVector::<f64>::from_element(n, (1.0 - damping) / n as f64);
    let x = lhs.lu().solve(&rhs).expect("pagerank system is non-singular");
    x.iter().copied().collect()
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-12 * a.abs().max(b.abs()))
}

/// All-pairs shortest paths by Floyd-Warshall on lengths `1 / m` for
/// `m >= eps` (no self loops), then shortest-path counts by dynamic
/// programming over nodes in distance order.
pub fn paths(m: &Mat, eps: f64) -> (Mat, Mat) {
    let n = m.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for u in 0..n {
        d[u][u] = 0.0;
        for v in 0..n {
            if u != v && m[u][v] >= eps {
                d[u][v] = 1.0 / m[u][v];
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] && !same(d[i][k] + d[k][j], d[i][j]) {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let mut sigma = vec![vec![0.0; n]; n];
    for s in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&t| d[s][t].is_finite()).collect();
        order.sort_by(|&a, &b| d[s][a].total_cmp(&d[s][b]));
        sigma[s][s] = 1.0;
        for &t in order.iter().skip(1) {
            sigma[s][t] = (0..n)
                .filter(|&u| u != t && m[u][t] >= eps && d[s][u].is_finite() && same(d[s][u] + 1.0 / m[u][t], d[s][t]))
                .map(|u| sigma[s][u])
                .sum();
        }
    }
    (d, sigma)
}

/// Directed, unnormalised betweenness from pair counts.
pub fn betweenness_fw(m: &Mat, eps: f64) -> Vec<f64> {
    let n = m.len();
    let (d, sigma) = paths(m, eps);
    let mut b = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || !d[s][t].is_finite() {
                continue;
            }
            for v in 0..n {
                if v != s && v != t && d[s][v].is_finite() && d[v][t].is_finite() && same(d[s][v] + d[v][t], d[s][t]) {
                    b[v] += sigma[s][v] * sigma[v][t] / sigma[s][t];
                }
            }
        }
    }
    b
}

pub fn closeness_fw(m: &Mat, eps: f64) -> Vec<f64> {
    let (d, _) = paths(m, eps);
    d.iter()
        .map(|row| {
            let reach: Vec<f64> = row.iter().copied().filter(|x| x.is_finite()).collect();
            let total: f64 = reach.iter().sum();
            if reach.len() > 1 && total > 0.0 {
                (reach.len() - 1) as f64 / total
            } else {
                0.0
            }
        })
        .collect()
}

/// Best two-cluster partition by trying every labelling.
pub fn kmeans2_exhaustive(points: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let n = points.len();
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 1..(1u32 << n) - 1 {
        let labels: Vec<usize> = (0..n).map(|i| ((mask >> i) & 1) as usize).collect();
        let mut wcss = 0.0;
        for c in 0..2 {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p).collect();
            let dim = points[0].len();
            let centre: Vec<f64> =
                (0..dim).map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64).collect();
            wcss += members.iter().map(|p| p.iter().zip(&centre).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sum::<f64>();
        }
        if wcss < best.1 {
            best = (labels, wcss);
        }
    }
    best
}

/// Whether two labellings describe the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Fraction of (positive, negative) pairs ordered correctly, ties one half.
pub fn auc_pairs(scores: &[f64], labels: &[u8]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                num += if scores[i] > scores[j] {
                    1.0
                } else if scores[i] == scores[j] {
                    0.5
                } else {
                    0.0
                };
            }
        }
    }
    num / den
}

/// Adjusted Rand index from the contingency table.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> f64 {
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let c2 = |n: u64| (n * n.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&n| c2(n)).sum();
    let rows: f64 = table.iter().map(|r| c2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| c2(table.iter().map(|r| r[j]).sum())).sum();
    let expected = rows * cols / c2(a.len() as u64);
    let max = (rows + cols) / 2.0;
    if max == expected {
        1.0
    } else {
        (index - expected) / (max - expected)
    }
}

// Scalar-loop network.

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| (0..cols).map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum()).collect())
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub struct ScalarLstm {
    pub w: [Mat; 4],
    pub b: [Vec<f64>; 4],
}

impl ScalarLstm {
    /// Gate order f, i, c, o; weights act on `[h_prev, input]`.
    pub fn step(&self, h: &[f64], c: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let z: Vec<f64> = h.iter().chain(x).copied().collect();
        let gate = |g: usize| -> Vec<f64> {
            (0..h.len()).map(|j| self.b[g][j] + z.iter().enumerate().map(|(k, v)| v * self.w[g][k][j]).sum::<f64>()).collect()
        };
        let (f, i, g, o) = (gate(0), gate(1), gate(2), gate(3));
        let c_new: Vec<f64> = (0..h.len()).map(|j| sigmoid(f[j]) * c[j] + sigmoid(i[j]) * g[j].tanh()).collect();
        let h_new = (0..h.len()).map(|j| sigmoid(o[j]) * c_new[j].tanh()).collect();
        (h_new, c_new)
    }
}

fn lstm_of(p: &evonet::model::Lstm<Tensor>) -> ScalarLstm {
    ScalarLstm {
        w: [to_mat(&p.w_f), to_mat(&p.w_i), to_mat(&p.w_c), to_mat(&p.w_o)],
        b: [p.b_f.data().to_vec(), p.b_i.data().to_vec(), p.b_c.data().to_vec(), p.b_o.data().to_vec()],
    }
}

/// Neighbour-softmax attention pooling written per node.
pub fn gat_scalar(m: &Mat, h: &Mat, w: &[f64], eps: f64) -> Mat {
    let n = h.len();
    let hd = h[0].len();
    let leaky = |x: f64| if x > 0.0 { x } else { 0.2 * x };
    (0..n)
        .map(|v| {
            let nb: Vec<usize> = (0..n).filter(|&u| m[u][v] >= eps).collect();
            let mut out = vec![0.0; hd];
            if nb.is_empty() {
                return out;
            }
            let scores: Vec<f64> = nb
                .iter()
                .map(|&u| leaky((0..hd).map(|i| w[i] * h[v][i] + w[hd + i] * h[u][i]).sum()))
                .collect();
            let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|s| (s - top).exp()).sum();
            for (&u, s) in nb.iter().zip(&scores) {
                let a = (s - top).exp() / z;
                for i in 0..hd {
                    out[i] += a * m[u][v] * h[u][i];
                }
            }
            out
        })
        .collect()
}

pub fn ggnn_scalar(m: &Mat, h: &Mat, w_in: &Mat, w_out: &Mat, b: &[f64]) -> Mat {
    let n = h.len();
    let hd = h[0].len();
    (0..n)
        .map(|v| {
            let a_in: Vec<f64> = (0..hd).map(|i| (0..n).map(|u| m[v][u] * h[u][i]).sum()).collect();
            let a_out: Vec<f64> = (0..hd).map(|i| (0..n).map(|u| m[u][v] * h[u][i]).sum()).collect();
            (0..hd)
                .map(|j| b[j] + (0..hd).map(|i| a_in[i] * w_in[i][j] + a_out[i] * w_out[i][j]).sum::<f64>())
                .collect()
        })
        .collect()
}

pub fn pool_scalar(m: &Mat, h: &Mat) -> Mat {
    let n = h.len();
    (0..n).map(|v| (0..h[0].len()).map(|i| (0..n).map(|u| m[u][v] * h[u][i]).sum()).collect()).collect()
}

/// Event probability after each step and the attention values, computed
/// node by node from the model's parameter values.
pub fn evonet_scalar(net: &EvoNet, weights: &Mat, events: &[u8]) -> (Vec<f64>, Vec<f64>) {
    let p = &net.params;
    let cfg = &net.config;
    let (n, u_size) = (cfg.num_states, cfg.u_size);
    let phi_h = lstm_of(&p.phi_h);
    let phi_u = lstm_of(&p.phi_u);
    let w_alpha = p.w_alpha.data().to_vec();
    let mut h = to_mat(&net.states);
    let mut c_h = vec![vec![0.0; h[0].len()]; n];
    let mut u = vec![0.0; u_size];
    let mut c_u = vec![0.0; u_size];
    let (mut probs, mut alphas) = (Vec::new(), Vec::new());
    for k in 0..weights.len() - 1 {
        let m: Mat = (0..n).map(|a| (0..n).map(|b| weights[k][a] * weights[k + 1][b]).collect()).collect();
        let big_h = match (&p.message, cfg.message_kind) {
            (Message::Pool, MessageKind::Pool) => pool_scalar(&m, &h),
            (Message::Ggnn { w_in, w_out, b }, MessageKind::Ggnn) => {
                ggnn_scalar(&m, &h, &to_mat(w_in), &to_mat(w_out), b.data())
            }
            (Message::Gat { w }, MessageKind::Gat) => gat_scalar(&m, &h, w.data(), cfg.gat_epsilon),
            _ => panic!("message parameters do not match the configured kind"),
        };
        let sum_big: Vec<f64> = (0..big_h[0].len()).map(|i| big_h.iter().map(|r| r[i]).sum()).collect();
        let alpha = if cfg.attention_enabled {
            sigmoid(u.iter().chain(&sum_big).zip(&w_alpha).map(|(a, b)| a * b).sum())
        } else {
            1.0
        };
        alphas.push(alpha);
        let au: Vec<f64> = u.iter().map(|x| alpha * x).collect();
        let mut next_h = Vec::with_capacity(n);
        let mut next_c = Vec::with_capacity(n);
        for v in 0..n {
            let x: Vec<f64> = big_h[v].iter().chain(&au).copied().collect();
            let (hv, cv) = phi_h.step(&h[v], &c_h[v], &x);
            next_h.push(hv);
            next_c.push(cv);
        }
        h = next_h;
        c_h = next_c;
        let sum_h: Vec<f64> = (0..h[0].len()).map(|i| h.iter().map(|r| r[i]).sum()).collect();
        let x: Vec<f64> = std::iter::once(f64::from(events[k + 1])).chain(sum_h.iter().map(|v| alpha * v)).collect();
        let (un, cn) = phi_u.step(&u, &c_u, &x);
        u = un;
        c_u = cn;
        let z: Vec<f64> = u.iter().chain(&sum_h).copied().collect();
        probs.push(classify_scalar(&z, &to_mat(&p.w_fc), p.b_fc.data(), &to_mat(&p.w_cls), p.b_cls.data()));
    }
    (probs, alphas)
}

/// Probability of class 1 from `softmax(tanh(z W_fc + b_fc) W_cls + b_cls)`.
pub fn classify_scalar(z: &[f64], w_fc: &Mat, b_fc: &[f64], w_cls: &Mat, b_cls: &[f64]) -> f64 {
    let hidden: Vec<f64> = (0..b_fc.len())
        .map(|j| (b_fc[j] + z.iter().enumerate().map(|(i, v)| v * w_fc[i][j]).sum::<f64>()).tanh())
        .collect();
    let logit = |c: usize| b_cls[c] + hidden.iter().enumerate().map(|(i, v)| v * w_cls[i][c]).sum::<f64>();
    let (l0, l1) = (logit(0), logit(1));
    1.0 / (1.0 + (l0 - l1).exp())
}
