#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Writes a law-school-schema CSV with `n` synthetic students.
///
/// Race (`racetxt`) is 1 for about 84% of rows. Final GPA depends on the
/// first-year GPA, LSAT and undergraduate GPA; bar passage is logistic in
/// final GPA and LSAT.
pub fn synthetic_lawschool_csv(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    let z = |rng: &mut ChaCha8Rng| -> f64 { std.sample(rng) };
    let mut out = String::from(
        "decile1b,decile3,lsat,ugpa,zfygpa,zgpa,fulltime,fam_inc,male,racetxt,tier,pass_bar\n",
    );
    for _ in 0..n {
        let race = u8::from(rng.random::<f64>() < 0.84);
        let r = f64::from(race);
        let lsat = (33.0 + 5.0 * r + 5.0 * z(&mut rng))
            .round()
            .clamp(0.0, 60.0);
        let ugpa = (3.0 + 0.2 * r + 0.4 * z(&mut rng)).clamp(0.0, 4.0);
        let tier = rng.random_range(1..=6);
        let zfygpa = (0.08 * (lsat - 36.0) + 0.5 * (ugpa - 3.2) + 0.3 * r - 0.25
            + 0.8 * z(&mut rng))
        .clamp(-4.0, 4.0);
        let zgpa = (0.75 * zfygpa + 0.02 * (lsat - 36.0) + 0.5 * z(&mut rng)).clamp(-4.0, 4.0);
        let decile = |v: f64| (5.5 + 2.5 * v).round().clamp(1.0, 10.0);
        let d1 = decile(zfygpa);
        let d3 = decile(zgpa + 0.3 * z(&mut rng));
        let fulltime = u8::from(rng.random::<f64>() < 0.9);
        let fam_inc = rng.random_range(1..=5);
        let male = u8::from(rng.random::<f64>() < 0.55);
        let logit = 1.6 + 1.4 * zgpa + 0.07 * (lsat - 36.0);
        let pass = u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-logit).exp()));
        let _ = writeln!(
            out,
            "{d1},{d3},{lsat},{ugpa:.2},{zfygpa:.4},{zgpa:.4},{fulltime},{fam_inc},{male},{race},{tier},{pass}"
        );
    }
    out
}

pub fn write_lawschool(dir: &Path, n: usize, seed: u64) -> PathBuf {
    let path = dir.join("lawschool.csv");
    std::fs::write(&path, synthetic_lawschool_csv(n, seed)).unwrap();
    path
}
