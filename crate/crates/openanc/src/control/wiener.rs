//! Regularized multichannel Wiener estimation of control filters.
//!
//! The estimator works on *filtered references* `r_m = s_hat * x_m` (each
//! microphone convolved with the modeled secondary path) and the target
//! `d` observed at the ear. It minimizes the empirical quadratic cost
//!
//! ```text
//! J(w) = (1/N) * sum_n e[n]^2 + beta * ||w||^2,
//! e[n] = d[n] + sum_m (r_m * w_m)[n]
//! ```
//!
//! where the error sum runs over the *full zero-extended* convolution range.
//! That convention makes the normal-equation matrix exactly block-Toeplitz,
//! built from plain cross-correlations of the reference channels, so the
//! same correlation kernels drive the dense oracle solver, the FFT-based
//! matvec inside conjugate gradients, and the exact quadratic expansion of
//! the cost used in tests.

use num_complex::Complex;

use crate::dsp::fft::{fft_inplace, ifft_inplace};
use crate::dsp::{convolve, irfft, next_pow2, rfft, FirFilter, MultiWaveform, Waveform};
use crate::{Error, Result};

use super::AncFilterSet;

/// Convolve every microphone channel with the secondary-path model,
/// producing full-length (`N + L_s - 1`) filtered references.
pub fn filtered_reference(mics: &MultiWaveform, s_hat: &FirFilter) -> Result<MultiWaveform> {
    if mics.fs != s_hat.fs {
        return Err(Error::config(format!(
            "sample-rate mismatch: microphones at {} Hz, path model at {} Hz",
            mics.fs, s_hat.fs
        )));
    }
    let channels = mics
        .channels
        .iter()
        .map(|x| convolve(x, &s_hat.taps))
        .collect();
    MultiWaveform::new(mics.fs, channels)
}

/// Cross-correlation kernels of a set of filtered references against a
/// target signal, normalized by the analysis-window length. These fully
/// determine the Wiener normal equations for any filter length up to
/// `l_max` and any channel subset.
#[derive(Debug, Clone)]
pub struct CorrelationKernels {
    pub fs: u32,
    pub channels: usize,
    pub l_max: usize,
    pub n_window: usize,
    /// Pair kernels, index `m * channels + m2`; entry `t` holds
    /// `rho_{m,m2}[t - (l_max - 1)]` where
    /// `rho_{m,m2}[tau] = (1/N) * sum_n r_m[n] r_m2[n + tau]`.
    rho: Vec<Vec<f64>>,
    /// Target kernels; entry `i` holds `(1/N) * sum_n r_m[n] d[n + i]`.
    phi: Vec<Vec<f64>>,
}

impl CorrelationKernels {
    /// Compute all pair and target kernels with FFT cross-correlation.
    /// The normalization window is the target length `d.len()`.
    pub fn build(refs: &MultiWaveform, d: &Waveform, l_max: usize) -> Result<Self> {
        if refs.fs != d.fs {
            return Err(Error::config("references and target sample rates differ"));
        }
        if l_max == 0 {
            return Err(Error::config("filter length must be at least 1"));
        }
        if d.samples.is_empty() {
            return Err(Error::config("target signal is empty"));
        }
        let m = refs.channels.len();
        let n_ref = refs.len();
        let n_win = d.samples.len();
        let f_len = next_pow2(n_ref + n_win.max(n_ref) + l_max);

        let mut padded = vec![0.0; f_len];
        let mut spectra = Vec::with_capacity(m);
        for ch in &refs.channels {
            padded[..ch.len()].copy_from_slice(ch);
            padded[ch.len()..].fill(0.0);
            spectra.push(rfft(&padded));
        }
        padded[..d.samples.len()].copy_from_slice(&d.samples);
        padded[d.samples.len()..].fill(0.0);
        let spec_d = rfft(&padded);

        let scale = 1.0 / n_win as f64;
        let center = l_max - 1;
        let mut rho = vec![vec![0.0; 2 * l_max - 1]; m * m];
        let mut phi = Vec::with_capacity(m);
        let mut prod = vec![Complex::new(0.0, 0.0); f_len / 2 + 1];
        for a in 0..m {
            for b in a..m {
                for (p, (sa, sb)) in prod.iter_mut().zip(spectra[a].iter().zip(&spectra[b])) {
                    *p = sa.conj() * sb;
                }
                let corr = irfft(&prod, f_len);
                let pair = &mut rho[a * m + b];
                for (t, slot) in pair.iter_mut().enumerate() {
                    let tau = t as isize - center as isize;
                    let idx = tau.rem_euclid(f_len as isize) as usize;
                    *slot = corr[idx] * scale;
                }
                if b != a {
                    // rho_{b,a}[tau] = rho_{a,b}[-tau]
                    let mirrored: Vec<f64> = rho[a * m + b].iter().rev().copied().collect();
                    rho[b * m + a] = mirrored;
                }
            }
            for (p, (sa, sd)) in prod.iter_mut().zip(spectra[a].iter().zip(&spec_d)) {
                *p = sa.conj() * sd;
            }
            let corr = irfft(&prod, f_len);
            phi.push(corr[..l_max].iter().map(|v| v * scale).collect());
        }

        Ok(CorrelationKernels {
            fs: refs.fs,
            channels: m,
            l_max,
            n_window: n_win,
            rho,
            phi,
        })
    }

    /// Restrict the kernels to a channel subset and a shorter filter length.
    /// Equivalent to (but much cheaper than) rebuilding from the subset of
    /// reference channels with `l_max = l_c`.
    pub fn subset(&self, chans: &[usize], l_c: usize) -> Result<Self> {
        if l_c == 0 || l_c > self.l_max {
            return Err(Error::config(format!(
                "subset filter length {} outside 1..={}",
                l_c, self.l_max
            )));
        }
        if chans.is_empty() {
            return Err(Error::config("channel subset is empty"));
        }
        let mut seen = vec![false; self.channels];
        for &c in chans {
            if c >= self.channels {
                return Err(Error::config(format!("channel {c} out of range")));
            }
            if seen[c] {
                return Err(Error::config(format!("channel {c} repeated in subset")));
            }
            seen[c] = true;
        }
        let ms = chans.len();
        let lo = self.l_max - l_c;
        let hi = self.l_max + l_c - 1;
        let mut rho = Vec::with_capacity(ms * ms);
        for &a in chans {
            for &b in chans {
                rho.push(self.rho[a * self.channels + b][lo..hi].to_vec());
            }
        }
        let phi = chans.iter().map(|&a| self.phi[a][..l_c].to_vec()).collect();
        Ok(CorrelationKernels {
            fs: self.fs,
            channels: ms,
            l_max: l_c,
            n_window: self.n_window,
            rho,
            phi,
        })
    }

    /// Mean diagonal of the normal-equation matrix, i.e. the average
    /// zero-lag reference power. The default regularization is relative
    /// to this value.
    pub fn trace_mean(&self) -> f64 {
        let center = self.l_max - 1;
        (0..self.channels)
            .map(|m| self.rho[m * self.channels + m][center])
            .sum::<f64>()
            / self.channels as f64
    }

    fn rho_pair(&self, a: usize, b: usize) -> &[f64] {
        &self.rho[a * self.channels + b]
    }

    fn phi_flat(&self) -> Vec<f64> {
        self.phi.iter().flatten().copied().collect()
    }
}

/// How to solve the regularized normal equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveMethod {
    /// Dense Cholesky for small systems, conjugate gradients otherwise.
    Auto,
    /// Dense Cholesky on the explicitly assembled matrix. Memory and time
    /// grow with the square and cube of `channels * l_c`; intended as the
    /// verification oracle for small instances.
    Dense,
    /// Preconditioned conjugate gradients with FFT matvecs. `tol` is the
    /// relative residual target, `max_iter` the iteration cap.
    ConjugateGradient { tol: f64, max_iter: usize },
}

impl SolveMethod {
    pub fn cg() -> Self {
        SolveMethod::ConjugateGradient {
            tol: 1e-10,
            max_iter: 4000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WienerConfig {
    /// Control-filter length in taps (per microphone).
    pub l_c: usize,
    /// Regularization weight; `None` selects `1e-4` times the mean
    /// zero-lag reference power.
    pub beta: Option<f64>,
    pub method: SolveMethod,
}

impl WienerConfig {
    pub fn new(l_c: usize) -> Self {
        WienerConfig {
            l_c,
            beta: None,
            method: SolveMethod::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WienerSolution {
    pub filters: AncFilterSet,
    pub beta: f64,
    /// Conjugate-gradient iterations used (zero for the dense path).
    pub iterations: usize,
    /// Final relative residual of the normal equations.
    pub residual: f64,
}

/// Estimate control filters from filtered references and the ear target.
pub fn wiener_solve(
    refs: &MultiWaveform,
    d: &Waveform,
    cfg: &WienerConfig,
) -> Result<WienerSolution> {
    let kernels = CorrelationKernels::build(refs, d, cfg.l_c)?;
    solve_from_kernels(&kernels, cfg)
}

/// Solve the normal equations defined by precomputed kernels. The kernels
/// must have been built (or subset) at exactly `cfg.l_c`.
pub fn solve_from_kernels(
    kernels: &CorrelationKernels,
    cfg: &WienerConfig,
) -> Result<WienerSolution> {
    if kernels.l_max != cfg.l_c {
        return Err(Error::config(format!(
            "kernels built for filter length {}, requested {}",
            kernels.l_max, cfg.l_c
        )));
    }
    let trace_mean = kernels.trace_mean();
    let beta = cfg.beta.unwrap_or(1e-4 * trace_mean);
    if beta < 0.0 {
        return Err(Error::config("regularization weight must be non-negative"));
    }
    if trace_mean <= 0.0 && beta == 0.0 {
        return Err(Error::numerical(
            "normal equations are singular (no reference energy); use beta > 0",
        ));
    }
    let unknowns = kernels.channels * cfg.l_c;
    let (flat, iterations, residual) = match cfg.method {
        SolveMethod::Dense => (solve_dense(kernels, beta)?, 0, 0.0),
        SolveMethod::ConjugateGradient { tol, max_iter } => {
            let out = solve_cg(kernels, beta, tol, max_iter)?;
            (out.0, out.1, out.2)
        }
        SolveMethod::Auto => {
            if unknowns <= 768 {
                (solve_dense(kernels, beta)?, 0, 0.0)
            } else {
                let out = solve_cg(kernels, beta, 1e-10, 4000)?;
                (out.0, out.1, out.2)
            }
        }
    };
    let w: Vec<Vec<f64>> = flat.chunks(cfg.l_c).map(|c| c.to_vec()).collect();
    Ok(WienerSolution {
        filters: AncFilterSet::new(kernels.fs, w, beta)?,
        beta,
        iterations,
        residual,
    })
}

fn solve_dense(k: &CorrelationKernels, beta: f64) -> Result<Vec<f64>> {
    use nalgebra::{Cholesky, DMatrix, DVector};
    let m = k.channels;
    let l = k.l_max;
    let n = m * l;
    let center = l - 1;
    let mut a = DMatrix::<f64>::zeros(n, n);
    for bm in 0..m {
        for bm2 in 0..m {
            let pair = k.rho_pair(bm, bm2);
            for i in 0..l {
                for j in 0..l {
                    a[(bm * l + i, bm2 * l + j)] = pair[(i + center) - j];
                }
            }
        }
    }
    for i in 0..n {
        a[(i, i)] += beta;
    }
    let b = DVector::from_vec(k.phi_flat().iter().map(|v| -v).collect::<Vec<_>>());
    let chol = Cholesky::new(a).ok_or_else(|| {
        Error::numerical("normal equations are not positive definite; increase beta")
    })?;
    Ok(chol.solve(&b).as_slice().to_vec())
}

/// FFT-based application of the block-Toeplitz normal-equation operator
/// `u -> (Phi + beta I) u`.
struct ToeplitzOperator {
    m: usize,
    l: usize,
    f_len: usize,
    beta: f64,
    /// One-sided spectra of the zero-padded pair kernels, index `a * m + b`.
    spectra: Vec<Vec<Complex<f64>>>,
}

impl ToeplitzOperator {
    fn new(k: &CorrelationKernels, beta: f64) -> Self {
        let l = k.l_max;
        let f_len = next_pow2(3 * l); // linear convolution of 2l-1 with l
        let mut padded = vec![0.0; f_len];
        let mut spectra = Vec::with_capacity(k.channels * k.channels);
        for a in 0..k.channels {
            for b in 0..k.channels {
                let pair = k.rho_pair(a, b);
                padded[..pair.len()].copy_from_slice(pair);
                padded[pair.len()..].fill(0.0);
                spectra.push(rfft(&padded));
            }
        }
        ToeplitzOperator {
            m: k.channels,
            l,
            f_len,
            beta,
            spectra,
        }
    }

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let bins = self.f_len / 2 + 1;
        let mut padded = vec![0.0; self.f_len];
        let mut specs_u = Vec::with_capacity(self.m);
        for ch in u.chunks(self.l) {
            padded[..self.l].copy_from_slice(ch);
            padded[self.l..].fill(0.0);
            specs_u.push(rfft(&padded));
        }
        let mut out = vec![0.0; self.m * self.l];
        let mut acc = vec![Complex::new(0.0, 0.0); bins];
        for a in 0..self.m {
            acc.fill(Complex::new(0.0, 0.0));
            for (b, spec_u) in specs_u.iter().enumerate() {
                let pair = &self.spectra[a * self.m + b];
                for ((s, p), v) in acc.iter_mut().zip(pair).zip(spec_u) {
                    *s += p * v;
                }
            }
            let conv = irfft(&acc, self.f_len);
            let dst = &mut out[a * self.l..(a + 1) * self.l];
            dst.copy_from_slice(&conv[self.l - 1..2 * self.l - 1]);
            for (o, v) in dst.iter_mut().zip(&u[a * self.l..(a + 1) * self.l]) {
                *o += self.beta * v;
            }
        }
        out
    }
}

/// Block-circulant preconditioner: every Toeplitz block (including the
/// cross-channel ones) is approximated by its Frobenius-closest circulant,
/// which block-diagonalizes in the Fourier basis into one M x M
/// cross-spectral matrix per bin. Channels watching the same source are
/// strongly coupled, so inverting those small matrices — rather than just
/// their diagonals — is what keeps the iteration count flat as the filters
/// grow. The Frobenius-optimal lag blending matters just as much: a plain
/// wrapped-lag circulant misstates slowly decaying correlations near the
/// wrap point, and the inverse amplifies that error by 1/beta in the
/// near-null cross-channel subspace. Bins whose matrix fails a Cholesky
/// test fall back to inverting the diagonal alone.
struct CirculantPreconditioner {
    m: usize,
    l: usize,
    /// Per-bin inverse cross-spectral matrices, row-major M x M per bin.
    inv: Vec<Complex<f64>>,
}

impl CirculantPreconditioner {
    fn new(k: &CorrelationKernels, beta: f64) -> Self {
        use nalgebra::{Cholesky, DMatrix};
        let m = k.channels;
        let l = k.l_max;
        let center = l - 1;
        // Frobenius-optimal circulant spectra of every channel pair: lag t
        // blended with wrapped lag t - l by their diagonal multiplicity.
        let mut spectra = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                let pair = k.rho_pair(a, b);
                let mut c = vec![Complex::new(0.0, 0.0); l];
                c[0] = Complex::new(pair[center], 0.0);
                for t in 1..l {
                    let val = ((l - t) as f64 * pair[center + t]
                        + t as f64 * pair[center + t - l])
                        / l as f64;
                    c[t] = Complex::new(val, 0.0);
                }
                fft_inplace(&mut c);
                spectra.push(c);
            }
        }
        let trace_floor = 1e-10 * k.trace_mean().abs();
        let mut inv = vec![Complex::new(0.0, 0.0); l * m * m];
        let mut h = DMatrix::<Complex<f64>>::zeros(m, m);
        for bin in 0..l {
            for a in 0..m {
                for b in 0..m {
                    // Hermitian average irons out FFT roundoff.
                    let ab = spectra[a * m + b][bin];
                    let ba = spectra[b * m + a][bin].conj();
                    h[(a, b)] = 0.5 * (ab + ba);
                }
                h[(a, a)] = Complex::new(h[(a, a)].re + beta + trace_floor, 0.0);
            }
            let dst = &mut inv[bin * m * m..(bin + 1) * m * m];
            match Cholesky::new(h.clone()) {
                Some(chol) => {
                    let hi = chol.inverse();
                    for a in 0..m {
                        for b in 0..m {
                            dst[a * m + b] = hi[(a, b)];
                        }
                    }
                }
                None => {
                    for a in 0..m {
                        let e = h[(a, a)].re.max(trace_floor + beta);
                        dst[a * m + a] = Complex::new(1.0 / e, 0.0);
                    }
                }
            }
        }
        CirculantPreconditioner { m, l, inv }
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let (m, l) = (self.m, self.l);
        let mut bufs: Vec<Vec<Complex<f64>>> = r
            .chunks(l)
            .map(|ch| {
                let mut buf: Vec<Complex<f64>> =
                    ch.iter().map(|&v| Complex::new(v, 0.0)).collect();
                fft_inplace(&mut buf);
                buf
            })
            .collect();
        let mut v = vec![Complex::new(0.0, 0.0); m];
        for bin in 0..l {
            for (slot, buf) in v.iter_mut().zip(&bufs) {
                *slot = buf[bin];
            }
            let hi = &self.inv[bin * m * m..(bin + 1) * m * m];
            for (a, buf) in bufs.iter_mut().enumerate() {
                let mut acc = Complex::new(0.0, 0.0);
                for (ha, vb) in hi[a * m..(a + 1) * m].iter().zip(&v) {
                    acc += ha * vb;
                }
                buf[bin] = acc;
            }
        }
        let mut out = Vec::with_capacity(r.len());
        for buf in &mut bufs {
            ifft_inplace(buf);
            out.extend(buf.iter().map(|c| c.re));
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn solve_cg(
    k: &CorrelationKernels,
    beta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize, f64)> {
    let op = ToeplitzOperator::new(k, beta);
    let pre = CirculantPreconditioner::new(k, beta);
    let b: Vec<f64> = k.phi_flat().iter().map(|v| -v).collect();
    let b_norm = dot(&b, &b).sqrt();
    let n = b.len();
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0, 0.0));
    }
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut z = pre.apply(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for iter in 1..=max_iter {
        let ap = op.apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::numerical(
                "normal equations are not positive definite; increase beta",
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / b_norm;
        if rel <= tol {
            return Ok((x, iter, rel));
        }
        z = pre.apply(&r);
        let rz_new = dot(&r, &z);
        let beta_cg = rz_new / rz;
        for i in 0..n {
            p[i] = z[i] + beta_cg * p[i];
        }
        rz = rz_new;
    }
    // The iterate at the cap is still the monotone minimizer of the
    // regularized cost; a near-miss on the residual target (ill-conditioned
    // windows, e.g. ones containing a signal onset) leaves the cost within
    // rounding of its optimum, so only order-of-magnitude misses fail.
    if rel <= tol * 1e3 {
        return Ok((x, max_iter, rel));
    }
    Err(Error::numerical(format!(
        "conjugate gradients did not converge: relative residual {rel:.3e} after {max_iter} iterations"
    )))
}

/// Empirical cost of a filter set on given references and target, using the
/// zero-extended error range that the estimator minimizes:
/// `J = (1/N) * sum e^2 + beta * ||w||^2` with `N = d.len()` and the error
/// summed over the full convolution support.
pub fn empirical_cost(
    refs: &MultiWaveform,
    d: &Waveform,
    filters: &AncFilterSet,
    beta: f64,
) -> f64 {
    let l = filters.taps_per_channel();
    let n_ext = refs.len() + l - 1;
    let mut e = vec![0.0; n_ext.max(d.samples.len())];
    e[..d.samples.len()].copy_from_slice(&d.samples);
    for (ch, w) in refs.channels.iter().zip(&filters.w) {
        let y = convolve(ch, w);
        for (acc, v) in e.iter_mut().zip(&y) {
            *acc += v;
        }
    }
    let n = d.samples.len() as f64;
    e.iter().map(|v| v * v).sum::<f64>() / n + beta * filters.norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{seeded_noise, NoiseKind};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Microphone arrays hand the solver channels that are near-copies of
    /// one source, so the normal matrix is dominated by cross-channel
    /// coupling. This is the regime where a diagonal-only preconditioner
    /// stalls; the block preconditioner must converge quickly and still
    /// agree with the dense oracle.
    #[test]
    fn coupled_channels_converge_and_match_dense() {
        let fs = 22050;
        let n = 4000;
        let m = 4;
        let l = 128;
        let src = seeded_noise(NoiseKind::Pink, 7, n as f64 / fs as f64, fs).unwrap();
        let jit = seeded_noise(NoiseKind::White, 8, n as f64 / fs as f64, fs).unwrap();
        let channels: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                (0..n)
                    .map(|t| {
                        let del = t as isize - (2 * i) as isize;
                        let v = if del >= 0 { src.samples[del as usize] } else { 0.0 };
                        v + 1e-3 * jit.samples[(t + 31 * i) % n]
                    })
                    .collect()
            })
            .collect();
        let refs = MultiWaveform::new(fs, channels).unwrap();
        let d = Waveform::new(
            fs,
            (0..n)
                .map(|t| if t >= 5 { -src.samples[t - 5] } else { 0.0 })
                .collect(),
        );
        let dense = wiener_solve(
            &refs,
            &d,
            &WienerConfig {
                l_c: l,
                beta: None,
                method: SolveMethod::Dense,
            },
        )
        .unwrap();
        let cg = wiener_solve(
            &refs,
            &d,
            &WienerConfig {
                l_c: l,
                beta: None,
                method: SolveMethod::ConjugateGradient {
                    tol: 1e-10,
                    max_iter: 800,
                },
            },
        )
        .unwrap();
        assert!(
            cg.iterations < 800,
            "coupled instance should converge well inside the cap, used {}",
            cg.iterations
        );
        let num: f64 = cg
            .filters
            .w
            .iter()
            .flatten()
            .zip(dense.filters.w.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den: f64 = dense.filters.w.iter().flatten().map(|v| v * v).sum();
        assert!(
            (num / den).sqrt() < 1e-6,
            "CG disagrees with dense on the coupled instance: {:.3e}",
            (num / den).sqrt()
        );
    }

    fn toy_refs(m: usize, n: usize, seed: u64) -> MultiWaveform {
        let fs = 22050;
        let channels: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                let w =
                    seeded_noise(NoiseKind::White, seed + i as u64, n as f64 / fs as f64, fs)
                        .unwrap();
                // Light coloring so channels are not trivially white.
                let mut v = w.samples;
                for t in (1..v.len()).rev() {
                    v[t] += 0.6 * v[t - 1];
                }
                v
            })
            .collect();
        MultiWaveform::new(fs, channels).unwrap()
    }

    fn toy_target(refs: &MultiWaveform, n: usize, seed: u64) -> Waveform {
        // A target correlated with the references plus independent noise.
        let fs = refs.fs;
        let noise = seeded_noise(NoiseKind::White, seed, n as f64 / fs as f64, fs).unwrap();
        let mut d = vec![0.0; n];
        for ch in &refs.channels {
            for (t, slot) in d.iter_mut().enumerate() {
                let a = if t >= 3 { ch[t - 3] } else { 0.0 };
                let b = if t >= 7 { ch[t - 7] } else { 0.0 };
                *slot += 0.8 * a - 0.3 * b;
            }
        }
        for (slot, w) in d.iter_mut().zip(&noise.samples) {
            *slot += 0.1 * w;
        }
        Waveform::new(fs, d)
    }

    /// Brute-force kernels by direct summation over the zero-extended range.
    fn brute_kernels(
        refs: &MultiWaveform,
        d: &Waveform,
        l: usize,
    ) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>) {
        let m = refs.channels.len();
        let n = d.samples.len() as f64;
        let at = |ch: &[f64], i: isize| -> f64 {
            if i >= 0 && (i as usize) < ch.len() {
                ch[i as usize]
            } else {
                0.0
            }
        };
        let mut rho = vec![vec![vec![0.0; 2 * l - 1]; m]; m];
        for a in 0..m {
            for b in 0..m {
                for (t, slot) in rho[a][b].iter_mut().enumerate() {
                    let tau = t as isize - (l as isize - 1);
                    let mut s = 0.0;
                    for i in 0..refs.len() as isize {
                        s += at(&refs.channels[a], i) * at(&refs.channels[b], i + tau);
                    }
                    *slot = s / n;
                }
            }
        }
        let mut phi = vec![vec![0.0; l]; m];
        for a in 0..m {
            for (i, slot) in phi[a].iter_mut().enumerate() {
                let mut s = 0.0;
                for t in 0..refs.len() as isize {
                    s += at(&refs.channels[a], t) * at(&d.samples, t + i as isize);
                }
                *slot = s / n;
            }
        }
        (rho, phi)
    }

    #[test]
    fn kernels_match_brute_force() {
        let refs = toy_refs(2, 40, 11);
        let d = toy_target(&refs, 40, 99);
        let l = 6;
        let k = CorrelationKernels::build(&refs, &d, l).unwrap();
        let (rho, phi) = brute_kernels(&refs, &d, l);
        for a in 0..2 {
            for b in 0..2 {
                for t in 0..2 * l - 1 {
                    assert!(
                        (k.rho_pair(a, b)[t] - rho[a][b][t]).abs() < 1e-12,
                        "rho[{a}][{b}][{t}]"
                    );
                }
            }
            for i in 0..l {
                assert!((k.phi[a][i] - phi[a][i]).abs() < 1e-12, "phi[{a}][{i}]");
            }
        }
    }

    #[test]
    fn subset_matches_direct_build() {
        let refs = toy_refs(3, 200, 21);
        let d = toy_target(&refs, 200, 77);
        let full = CorrelationKernels::build(&refs, &d, 48).unwrap();
        let sub = full.subset(&[0, 2], 24).unwrap();
        let direct_refs =
            MultiWaveform::new(refs.fs, vec![refs.channels[0].clone(), refs.channels[2].clone()])
                .unwrap();
        let direct = CorrelationKernels::build(&direct_refs, &d, 24).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                for t in 0..47 {
                    assert!((sub.rho_pair(a, b)[t] - direct.rho_pair(a, b)[t]).abs() < 1e-12);
                }
            }
            for i in 0..24 {
                assert!((sub.phi[a][i] - direct.phi[a][i]).abs() < 1e-12);
            }
        }
        assert!(full.subset(&[0, 0], 8).is_err());
        assert!(full.subset(&[3], 8).is_err());
        assert!(full.subset(&[0], 49).is_err());
    }

    #[test]
    fn recovers_exact_delay_inverse() {
        // White reference whose tail is silent, target d = -x delayed by 10.
        // The finite-sample optimum is then exactly w = -(-delta_10), i.e.
        // a unit impulse at tap 10, and the minimum cost is zero.
        let fs = 22050;
        let n = 4000;
        let l = 24;
        let mut x = seeded_noise(NoiseKind::White, 5, n as f64 / fs as f64, fs)
            .unwrap()
            .samples;
        for v in x.iter_mut().skip(n - (l + 10)) {
            *v = 0.0;
        }
        let mut d = vec![0.0; n];
        for t in 10..n {
            d[t] = -x[t - 10];
        }
        let refs = MultiWaveform::new(fs, vec![x]).unwrap();
        let d = Waveform::new(fs, d);
        let mut cfg = WienerConfig::new(l);
        cfg.beta = Some(0.0);
        cfg.method = SolveMethod::Dense;
        let sol = wiener_solve(&refs, &d, &cfg).unwrap();
        for (i, &w) in sol.filters.w[0].iter().enumerate() {
            let want = if i == 10 { 1.0 } else { 0.0 };
            assert!((w - want).abs() < 1e-7, "tap {i}: {w}");
        }
        let j = empirical_cost(&refs, &d, &sol.filters, 0.0);
        assert!(j < 1e-12, "residual cost {j}");
    }

    #[test]
    fn cg_matches_dense() {
        let refs = toy_refs(2, 2000, 31);
        let d = toy_target(&refs, 2000, 313);
        let mut cfg = WienerConfig::new(32);
        cfg.method = SolveMethod::Dense;
        let dense = wiener_solve(&refs, &d, &cfg).unwrap();
        cfg.method = SolveMethod::cg();
        let cg = wiener_solve(&refs, &d, &cfg).unwrap();
        assert!(cg.iterations < 200, "cg took {} iterations", cg.iterations);
        let norm: f64 = dense.filters.norm_sqr().sqrt();
        let diff: f64 = dense
            .filters
            .w
            .iter()
            .flatten()
            .zip(cg.filters.w.iter().flatten())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(diff / norm < 1e-8, "relative diff {}", diff / norm);
    }

    #[test]
    fn optimum_has_zero_gradient_and_perturbations_increase_cost() {
        let refs = toy_refs(3, 1500, 41);
        let d = toy_target(&refs, 1500, 414);
        let l = 16;
        let cfg = WienerConfig::new(l);
        let sol = wiener_solve(&refs, &d, &cfg).unwrap();
        let k = CorrelationKernels::build(&refs, &d, l).unwrap();

        // Gradient of J at the optimum: 2 * ((Phi + beta I) w + phi) = 0.
        let op = ToeplitzOperator::new(&k, sol.beta);
        let flat: Vec<f64> = sol.filters.w.iter().flatten().copied().collect();
        let aw = op.apply(&flat);
        let phi = k.phi_flat();
        let g_norm = aw
            .iter()
            .zip(&phi)
            .map(|(a, p)| (a + p) * (a + p))
            .sum::<f64>()
            .sqrt();
        let phi_norm = dot(&phi, &phi).sqrt();
        assert!(g_norm / phi_norm < 1e-6, "gradient {}", g_norm / phi_norm);

        // Random perturbations must increase the empirical cost by exactly
        // the quadratic form dw' (Phi + beta I) dw.
        let j_star = empirical_cost(&refs, &d, &sol.filters, sol.beta);
        let mut rng = ChaCha8Rng::seed_from_u64(5150);
        let scale = 1e-3 * dot(&flat, &flat).sqrt().max(1e-6);
        for _ in 0..100 {
            let dw: Vec<f64> = (0..flat.len())
                .map(|_| scale * (rng.random::<f64>() - 0.5))
                .collect();
            let wp: Vec<Vec<f64>> = flat
                .iter()
                .zip(&dw)
                .map(|(a, b)| a + b)
                .collect::<Vec<f64>>()
                .chunks(l)
                .map(|c| c.to_vec())
                .collect();
            let perturbed = AncFilterSet::new(refs.fs, wp, sol.beta).unwrap();
            let j = empirical_cost(&refs, &d, &perturbed, sol.beta);
            assert!(j > j_star, "perturbation decreased cost: {j} < {j_star}");
            let op_dw = op.apply(&dw);
            let predicted = j_star + dot(&dw, &op_dw);
            assert!(
                (j - predicted).abs() <= 1e-9 * j_star.max(1e-12),
                "quadratic expansion mismatch: {} vs {}",
                j,
                predicted
            );
        }
    }

    #[test]
    fn stronger_regularization_shrinks_filters() {
        let refs = toy_refs(2, 1200, 61);
        let d = toy_target(&refs, 1200, 616);
        let mut last = f64::INFINITY;
        for beta in [1e-6, 1e-4, 1e-2, 1.0] {
            let mut cfg = WienerConfig::new(24);
            cfg.beta = Some(beta);
            let sol = wiener_solve(&refs, &d, &cfg).unwrap();
            let norm = sol.filters.norm_sqr().sqrt();
            assert!(norm < last, "norm did not shrink at beta={beta}");
            last = norm;
        }
    }

    #[test]
    fn zero_references_without_regularization_is_an_error() {
        let fs = 22050;
        let refs = MultiWaveform::new(fs, vec![vec![0.0; 500]; 2]).unwrap();
        let d = Waveform::new(fs, vec![1.0; 500]);
        let mut cfg = WienerConfig::new(8);
        cfg.beta = Some(0.0);
        let err = wiener_solve(&refs, &d, &cfg).unwrap_err();
        assert!(err.to_string().contains("beta"), "got: {err}");

        // With regularization the zero filter set is the valid answer.
        cfg.beta = Some(1e-4);
        let sol = wiener_solve(&refs, &d, &cfg).unwrap();
        assert!(sol.filters.norm_sqr() == 0.0);
    }

    #[test]
    fn filtered_reference_is_full_convolution() {
        let fs = 22050;
        let mics =
            MultiWaveform::new(fs, vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let s_hat = FirFilter::new(fs, vec![1.0, -1.0]);
        let refs = filtered_reference(&mics, &s_hat).unwrap();
        assert_eq!(refs.channels[0], vec![1.0, -1.0, 2.0, -2.0]);
        assert_eq!(refs.channels[1], vec![0.0, 1.0, -1.0, 0.0]);

        let bad = FirFilter::new(44100, vec![1.0]);
        assert!(filtered_reference(&mics, &bad).is_err());
    }

    #[test]
    fn cost_of_zero_filters_is_target_power() {
        let fs = 22050;
        let refs = toy_refs(2, 300, 71);
        let d = toy_target(&refs, 300, 717);
        let zeros = AncFilterSet::zeros(fs, 2, 16);
        let j = empirical_cost(&refs, &d, &zeros, 0.0);
        let want = d.samples.iter().map(|v| v * v).sum::<f64>() / 300.0;
        assert!((j - want).abs() < 1e-12);
    }
}
