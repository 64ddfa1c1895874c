//! Reference implementations used as test oracles. They are written
//! independently of the library and favor obviousness over speed.
#![allow(dead_code)]

use num_complex::Complex64;
use ris_mac::reservation::ReservationProblem;

/// Best objective and, among optimal solutions, the smallest maximum
/// number of users on one channel. Channels are enumerated exhaustively;
/// for a fixed assignment the best counts fill each channel up to its
/// capacity or `r_max` per user.
pub fn reservation_by_enumeration(p: &ReservationProblem) -> Option<(u64, usize)> {
    let c = p.capacity.len();
    let mut best: Option<(u64, usize)> = None;
    let total = (c + 1).pow(p.users as u32);
    for code in 0..total {
        let mut x = code;
        let mut per = vec![0usize; c];
        let mut assigned = 0;
        for _ in 0..p.users {
            let ch = x % (c + 1);
            x /= c + 1;
            if ch > 0 {
                per[ch - 1] += 1;
                assigned += 1;
            }
        }
        if assigned != p.target {
            continue;
        }
        let mut value = 0u64;
        let mut ok = true;
        for (n, &cap) in per.iter().zip(&p.capacity) {
            if *n as u64 > u64::from(cap) {
                ok = false;
                break;
            }
            value += u64::from(cap).min(*n as u64 * u64::from(p.r_max));
        }
        if !ok {
            continue;
        }
        let load = per.iter().copied().max().unwrap_or(0);
        best = match best {
            None => Some((value, load)),
            Some((v, l)) if value > v || (value == v && load < l) => Some((value, load)),
            b => b,
        };
    }
    best
}

/// Enumerates every (channel, count) choice of every user.
pub fn reservation_brute_force(p: &ReservationProblem) -> Option<u64> {
    let c = p.capacity.len();
    let mut options = vec![(0usize, 0u32)];
    for ch in 1..=c {
        for r in 1..=p.r_max {
            options.push((ch, r));
        }
    }
    let mut best = None;
    let mut idx = vec![0usize; p.users];
    loop {
        let mut used = vec![0u64; c];
        let mut assigned = 0;
        let mut value = 0;
        for &i in &idx {
            let (ch, r) = options[i];
            if ch > 0 {
                used[ch - 1] += u64::from(r);
                assigned += 1;
                value += u64::from(r);
            }
        }
        if assigned == p.target && used.iter().zip(&p.capacity).all(|(&u, &cap)| u <= u64::from(cap)) {
            best = Some(best.map_or(value, |b: u64| b.max(value)));
        }
        // odometer
        let mut k = 0;
        loop {
            if k == p.users {
                return best;
            }
            idx[k] += 1;
            if idx[k] < options.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// SNR of every codebook assignment, maximized over all of them.
pub fn exhaustive_codebook(h: Complex64, coeffs: &[Complex64], bits: u32, power: f64, noise: f64) -> (Vec<u32>, f64) {
    let levels = 1u32 << bits;
    let n = coeffs.len();
    let mut best = (vec![0; n], f64::NEG_INFINITY);
    let mut idx = vec![0u32; n];
    loop {
        let mut sum = h;
        for (c, &i) in coeffs.iter().zip(&idx) {
            sum += c * Complex64::from_polar(1.0, std::f64::consts::TAU * f64::from(i) / f64::from(levels));
        }
        let snr = power * sum.norm_sqr() / noise;
        if snr > best.1 {
            best = (idx.clone(), snr);
        }
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            idx[k] += 1;
            if idx[k] < levels {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Coherent sum: every path adds in phase.
pub fn coherent_snr(h: Complex64, coeffs: &[Complex64], power: f64, noise: f64) -> f64 {
    let amp = h.norm() + coeffs.iter().map(|c| c.norm()).sum::<f64>();
    power * amp * amp / noise
}

/// Slope of a least-squares line through (ln x, ln y).
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Transmission probability from the stationary distribution of the
/// backoff chain, summing every state explicitly.
pub fn tau_by_state_sum(p: f64, q: f64, w0: u32, m: u32) -> f64 {
    // b_{i,0}: stage-i heads; b_{i,k} = (W_i - k)/W_i * b_{i,0}
    // T state mass: (1-q)/q * b_success where b_success = (1-p) * sum b_{i,0}
    let mut heads = vec![0.0; m as usize + 1];
    heads[0] = 1.0;
    for i in 1..m as usize {
        heads[i] = p * heads[i - 1];
    }
    if m >= 1 {
        heads[m as usize] = p * heads[m as usize - 1] / (1.0 - p);
    }
    let mut total = 0.0;
    for (i, &b0) in heads.iter().enumerate() {
        let w = f64::from(w0 << i);
        for k in 0..(w as u64) {
            total += (w - k as f64) / w * b0;
        }
    }
    let transmit: f64 = heads.iter().sum();
    let t_mass = (1.0 - q) / q * (1.0 - p) * transmit;
    transmit / (total + t_mass)
}

/// Birth-death stationary distribution by solving the balance equations
/// with a dense linear solve.
pub fn birth_death_stationary(arrivals: &[f64], eta: f64) -> Vec<f64> {
    let n = arrivals.len() + 1;
    // generator transpose rows, last row replaced by normalization
    let mut a = vec![vec![0.0; n + 1]; n];
    for j in 0..n {
        let up = if j < n - 1 { arrivals[j] } else { 0.0 };
        let down = eta * j as f64;
        a[j][j] -= up + down;
        if j + 1 < n {
            a[j + 1][j] += up;
        }
        if j > 0 {
            a[j - 1][j] += down;
        }
    }
    a[n - 1].iter_mut().for_each(|v| *v = 1.0);
    for row in a.iter_mut().take(n - 1) {
        row[n] = 0.0;
    }
    // Gaussian elimination with partial pivoting
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                for k in col..=n {
                    a[r][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..n).map(|j| a[j][n] / a[j][j]).collect()
}
