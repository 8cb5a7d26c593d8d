use hmas_core::geo::{
    geodetic_to_enu, CorrectionMsg, FixQuality, GeodeticCoord, NoiseModel, RoverConfig, RoverState,
};

const STEPS: usize = 1_000;
/// Relative tolerance on an empirical sigma from 1000 draws.
const SIGMA_REL_TOL: f64 = 0.15;

fn base() -> GeodeticCoord {
    GeodeticCoord::new(48.70, 6.15, 220.0).unwrap()
}

fn correction(epoch: u64, stamp: f64) -> CorrectionMsg {
    CorrectionMsg {
        base_position: base(),
        epoch,
        stamp,
    }
}

fn unbiased() -> RoverConfig {
    let mut cfg = RoverConfig::default();
    cfg.noise.bias_max = 0.0;
    cfg
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Horizontal radial RMS and vertical RMS of `STEPS` fixes at `quality`.
fn spread(quality: FixQuality, fresh: bool, seed: u64) -> (f64, f64, Vec<FixQuality>) {
    let mut r = RoverState::new("r", unbiased(), seed).with_quality(quality);
    let (mut h, mut v, mut q) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..STEPS {
        let t = r.next_fix_time();
        if fresh {
            r.receive(&correction(k as u64, t));
        }
        let fix = r.emit(&base(), 0.3);
        let e = geodetic_to_enu(&fix.position, &base());
        h.push(e.east.hypot(e.north));
        v.push(e.up);
        q.push(fix.quality);
    }
    (rms(&h), rms(&v), q)
}

#[test]
fn fixed_sigma_matches_model() {
    let n = NoiseModel::default();
    for seed in [1, 2, 3] {
        let (h, v, q) = spread(FixQuality::Fixed, true, seed);
        assert!(q.iter().all(|&q| q == FixQuality::Fixed));
        let sh = n.sigma_h(FixQuality::Fixed);
        let sv = n.sigma_v(FixQuality::Fixed);
        assert!((h - sh).abs() <= SIGMA_REL_TOL * sh, "seed {seed}: horizontal {h} vs {sh}");
        assert!((v - sv).abs() <= SIGMA_REL_TOL * sv, "seed {seed}: vertical {v} vs {sv}");
    }
}

#[test]
fn withheld_corrections_settle_in_single() {
    let n = NoiseModel::default();
    let (h, v, q) = spread(FixQuality::Fixed, false, 5);
    assert_eq!(q[0], FixQuality::Float);
    assert!(q[1..].iter().all(|&q| q == FixQuality::Single));
    // The first fix is float; its weight in 1000 draws is negligible.
    let sh = n.sigma_h(FixQuality::Single);
    let sv = n.sigma_v(FixQuality::Single);
    assert!((h - sh).abs() <= SIGMA_REL_TOL * sh, "horizontal {h} vs {sh}");
    assert!((v - sv).abs() <= SIGMA_REL_TOL * sv, "vertical {v} vs {sv}");
}

#[test]
fn quality_follows_correction_age() {
    let mut r = RoverState::new("r", unbiased(), 9);
    let timeout = r.config().correction_timeout_s;
    let period = r.config().fix_period();
    r.receive(&correction(0, 0.0));
    let mut seen = Vec::new();
    while r.next_fix_time() <= 3.0 * timeout {
        let t = r.next_fix_time();
        let fix = r.emit(&base(), 0.0);
        seen.push((t, fix.quality));
    }
    // Cold start climbs single -> float -> fixed, then degrades after the
    // timeout and again after twice the timeout.
    assert_eq!(seen[0].1, FixQuality::Float);
    assert_eq!(seen[1].1, FixQuality::Fixed);
    for &(t, q) in &seen[1..] {
        let want = if t <= timeout {
            FixQuality::Fixed
        } else if t <= 2.0 * timeout {
            FixQuality::Float
        } else {
            FixQuality::Single
        };
        assert_eq!(q, want, "t = {t}");
    }
    assert!(seen.windows(2).all(|w| (w[1].0 - w[0].0 - period).abs() < 1e-12));
}

#[test]
fn same_seed_same_stream() {
    let a = spread(FixQuality::Fixed, true, 77);
    let b = spread(FixQuality::Fixed, true, 77);
    assert_eq!(a, b);
}
