//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use specfocus::Image;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |_, _| rng.random::<f64>()).unwrap()
}

pub fn random_in(rng: &mut ChaCha8Rng, w: usize, h: usize, lo: f64, hi: f64) -> Image {
    Image::from_fn(w, h, |_, _| lo + (hi - lo) * rng.random::<f64>()).unwrap()
}

/// Dense 2-D Gaussian convolution with clamped (replicate) indices and the
/// kernel normalized over the full `(2r+1)²` square, `r = ceil(3σ)`.
pub fn dense_blur(img: &Image, sigma: f64) -> Vec<f64> {
    let (w, h) = img.dims();
    let r = (3.0 * sigma).ceil() as i64;
    let mut weights = Vec::new();
    let mut total = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            let v = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp();
            weights.push(v);
            total += v;
        }
    }
    let side = (2 * r + 1) as usize;
    let mut out = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut acc = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let yy = (y + dy).clamp(0, h as i64 - 1) as usize;
                    let xx = (x + dx).clamp(0, w as i64 - 1) as usize;
                    let k = weights[(dy + r) as usize * side + (dx + r) as usize] / total;
                    acc += k * img[(yy, xx)];
                }
            }
            out[y as usize * w + x as usize] = acc;
        }
    }
    out
}

/// `(∂x u, ∂y u)` at `(r, c)` by explicit indexing; zero past the last
/// column / row.
pub fn diff_at(u: &Image, r: usize, c: usize) -> (f64, f64) {
    let (w, h) = u.dims();
    let dx = if c + 1 < w { u[(r, c + 1)] - u[(r, c)] } else { 0.0 };
    let dy = if r + 1 < h { u[(r + 1, c)] - u[(r, c)] } else { 0.0 };
    (dx, dy)
}

/// Pixel-by-pixel evaluation of the LLT energy.
pub fn objective_oracle(
    gain: &Image,
    offset: &Image,
    source: &Image,
    target: &Image,
    alpha: f64,
    beta: f64,
) -> f64 {
    let (w, h) = source.dims();
    let mut e = 0.0;
    for r in 0..h {
        for c in 0..w {
            let a = gain[(r, c)];
            let res = a * source[(r, c)] + offset[(r, c)] - target[(r, c)];
            let (sx, sy) = diff_at(source, r, c);
            let (tx, ty) = diff_at(target, r, c);
            let (ax, ay) = diff_at(gain, r, c);
            let (bx, by) = diff_at(offset, r, c);
            e += res * res;
            e += alpha * ((a * sx - tx).powi(2) + (a * sy - ty).powi(2));
            e += beta * (ax * ax + ay * ay + bx * bx + by * by);
        }
    }
    e
}

/// Central differences of `f` with respect to every entry of `x`.
pub fn central_differences(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Relative error with the denominator floored at `1e-3`, so components
/// that are zero up to rounding are compared absolutely.
pub fn rel_err(analytic: f64, reference: f64) -> f64 {
    (analytic - reference).abs() / analytic.abs().max(reference.abs()).max(1e-3)
}

pub fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ |a_i b_i|`, the scale against which rounding in [`inner`] is measured.
pub fn inner_mass(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x * y).abs()).sum()
}

/// Both sides of `⟨∇u, v⟩ = ⟨u, ∇ᵀv⟩` and the relative error between them,
/// taken against the summand mass of the left side since the inner products
/// themselves may cancel to near zero.
pub fn adjoint_gap(
    u: &Image,
    v: &specfocus::imgops::GradientPair,
) -> (f64, f64, f64) {
    let gu = specfocus::imgops::gradient(u);
    let lhs = inner(gu.gx.as_slice(), v.gx.as_slice()) + inner(gu.gy.as_slice(), v.gy.as_slice());
    let mass = inner_mass(gu.gx.as_slice(), v.gx.as_slice())
        + inner_mass(gu.gy.as_slice(), v.gy.as_slice());
    let rhs = inner(u.as_slice(), specfocus::imgops::gradient_adjoint(v).unwrap().as_slice());
    let rel = if mass > 0.0 { (lhs - rhs).abs() / mass } else { (lhs - rhs).abs() };
    (lhs, rhs, rel)
}

/// Image pair `p` of the SSIM reference set; must stay in sync with
/// `tests/oracle/ssim_reference.py`.
pub fn ssim_pair(p: usize) -> (Image, Image) {
    let (h, w) = (20 + 2 * p, 24 + p);
    let pf = p as f64;
    let mut x = vec![0.0; w * h];
    let mut y = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let (rf, cf) = (r as f64, c as f64);
            let base = ((r * 37 + c * 91 + p * 13) % 101) as f64 / 100.0;
            let xv = (0.25 + 0.5 * base + 0.2 * (0.3 * cf + 0.2 * rf + pf).sin()).clamp(0.0, 1.0);
            let jitter = (((r * 17 + c * 29 + p * 7) % 13) as f64 - 6.0) * (1.0 + pf) / 400.0;
            let gain = 0.9 - 0.08 * pf;
            let mut yv = gain * xv + 0.1 + 0.05 * (0.5 * rf - 0.4 * cf + 2.0 * pf).cos() + jitter;
            if p % 4 == 3 {
                yv = 1.0 - yv;
            }
            x[r * w + c] = xv;
            y[r * w + c] = yv.clamp(0.0, 1.0);
        }
    }
    (Image::new(w, h, x).unwrap(), Image::new(w, h, y).unwrap())
}

/// Output of `tests/oracle/ssim_reference.py`.
pub const SSIM_REFERENCE: [f64; 10] = [
    0.969768918669,
    0.954660080474,
    0.917257079130,
    -0.755153741734,
    0.778008060804,
    0.676403737222,
    0.550389991461,
    -0.405676707339,
    0.294957483919,
    0.184837434425,
];

/// SHA-256 over 16-bit big-endian quantized pixels of `images`.
pub fn quantized_digest<'a>(images: impl IntoIterator<Item = &'a Image>) -> String {
    let mut hasher = Sha256::new();
    for img in images {
        hasher.update((img.width() as u64).to_le_bytes());
        hasher.update((img.height() as u64).to_le_bytes());
        for &v in img.as_slice() {
            let q = (v.clamp(0.0, 1.0) * 65535.0).round() as u16;
            hasher.update(q.to_be_bytes());
        }
    }
    hex::encode(hasher.finalize())
}

pub fn file_digest(path: &std::path::Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

/// `(relative path, sha256)` for every file below `root`, sorted.
pub fn tree_digest(root: &std::path::Path) -> Vec<(String, String)> {
    fn walk(dir: &std::path::Path, root: &std::path::Path, out: &mut Vec<(String, String)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, file_digest(&path)));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}

/// Runs the command-line frontend with string arguments.
pub fn cli<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> i32 {
    let argv: Vec<std::ffi::OsString> = std::iter::once("specfocus".into())
        .chain(args.iter().map(|a| a.as_ref().to_os_string()))
        .collect();
    specfocus::cli::run(argv)
}
