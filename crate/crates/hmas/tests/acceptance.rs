//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Runs without the libtest harness so the verdict lines print in order.
//! Exits nonzero when any criterion fails.

use std::collections::BTreeMap;
use std::time::Instant;

use hmas::bag::{self, Recorder, ReplaySpeed};
use hmas::bench::{self, AnalyzeOptions};
use hmas::bus::Bus;
use hmas::csvio;
use hmas::scenario::{self, Scenario};
use hmas_core::analysis::{path_length, Side};
use hmas_core::bagfmt;
use hmas_core::geo::{ecef_to_enu, ecef_to_geodetic, geodetic_to_ecef, EcefCoord, GeodeticCoord};
use hmas_core::rig::{ExperimentKind, ExperimentSpec};
use hmas_core::{FrameId, QosProfile, Quat, Transform, TransformTree, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Criterion 1
const ROUND_TRIP_POINTS: usize = 10_000;
const ROUND_TRIP_DEG_TOL: f64 = 1e-9;
const ROUND_TRIP_ALT_TOL_M: f64 = 1e-6;
const EQUATOR_ECEF: [f64; 3] = [6_378_137.0, 0.0, 0.0];
const POLE_Z_M: f64 = 6_356_752.314;
const POLE_Z_TOL_M: f64 = 1e-3;
// Criterion 2
const ENU_PAIRS: usize = 1_000;
const ENU_RADIUS_M: f64 = 10_000.0;
const ENU_REL_TOL: f64 = 1e-9;
// Criterion 3
const BURST: usize = 100;
const NON_BLOCKING_PUBLISHES: usize = 100_000;
// Criterion 4
const TF_MAX_FRAMES: usize = 50;
const TF_TREES: usize = 40;
const TF_TOL: f64 = 1e-9;
const TF_ROT_ENDPOINT_TOL: f64 = 1e-12;
const MATRIX_PAIRS: usize = 1_000;
// Criterion 5
const STATIC_SEEDS: u64 = 20;
const MEAN_ERROR_MAX_M: f64 = 0.20;
const TIGHT_SIDE_M: f64 = 0.05;
const TIGHT_SIDES_MIN: usize = 2;
// Criterion 6
const WINDOW_ALIGN_S: f64 = 2.0;
const TWIST_M: f64 = 0.10;
const TWIST_TOL_M: f64 = 0.05;
const TWIST_STARTS: [f64; 3] = [140.0, 160.0, 230.0];
// Criterion 7
const OBSTRUCTION_M: [f64; 2] = [1.4, 1.5];
const OBSTRUCTION_TOL_M: f64 = 0.2;
const ELSEWHERE_MAX_M: f64 = 0.20;
// Criterion 8
const TRANSLATION_TOTAL_M: f64 = 130.0;
const TRANSLATION_TOL_M: f64 = 0.1;
const CENTROID_RMS_MAX_M: f64 = 0.20;
// Criterion 10
const FOLLOW_NOISELESS_MAX_M: f64 = 0.5;
const FOLLOW_NOISY_MAX_M: f64 = 0.7;
const FIXES_PER_SECOND: u64 = 14;

const SEEDS: [u64; 5] = [1, 2, 3, 7, 42];

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_geodetic(rng: &mut ChaCha8Rng) -> GeodeticCoord {
    let lat = rng.random_range(-90.0..=90.0);
    let lon = 180.0 - rng.random_range(0.0..360.0);
    GeodeticCoord::new(lat, lon, rng.random_range(-500.0..9_000.0)).unwrap()
}

fn geodesy_oracle() -> Verdict {
    let eq = geodetic_to_ecef(&GeodeticCoord::new(0.0, 0.0, 0.0).unwrap());
    check(
        eq == EcefCoord::new(EQUATOR_ECEF[0], EQUATOR_ECEF[1], EQUATOR_ECEF[2]),
        format!("equator anchor {eq:?}"),
    )?;
    let pole = geodetic_to_ecef(&GeodeticCoord::new(90.0, 0.0, 0.0).unwrap());
    check(
        (pole.z - POLE_Z_M).abs() <= POLE_Z_TOL_M && pole.x.abs() < 1e-6,
        format!("pole anchor {pole:?}"),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_deg, mut worst_alt) = (0.0f64, 0.0f64);
    for _ in 0..ROUND_TRIP_POINTS {
        let g = random_geodetic(&mut rng);
        let back = ecef_to_geodetic(&geodetic_to_ecef(&g)).map_err(|e| e.to_string())?;
        let mut dlon = (back.lon - g.lon).abs();
        dlon = dlon.min(360.0 - dlon);
        worst_deg = worst_deg.max((back.lat - g.lat).abs()).max(dlon);
        worst_alt = worst_alt.max((back.alt - g.alt).abs());
    }
    check(
        worst_deg <= ROUND_TRIP_DEG_TOL && worst_alt <= ROUND_TRIP_ALT_TOL_M,
        format!("worst round trip {worst_deg:e} deg, {worst_alt:e} m"),
    )?;
    Ok(format!("{ROUND_TRIP_POINTS} points, worst {worst_deg:.1e} deg / {worst_alt:.1e} m; anchors exact"))
}

fn random_offset(rng: &mut ChaCha8Rng, radius: f64) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if v.norm() <= 1.0 {
            return v.scale(radius);
        }
    }
}

fn enu_rigidity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let base = random_geodetic(&mut rng);
    let origin = geodetic_to_ecef(&base).vec();
    let mut worst = 0.0f64;
    for _ in 0..ENU_PAIRS {
        let p1 = EcefCoord::from_vec(origin + random_offset(&mut rng, ENU_RADIUS_M));
        let p2 = EcefCoord::from_vec(origin + random_offset(&mut rng, ENU_RADIUS_M));
        let chord = p1.distance(p2);
        let enu = ecef_to_enu(&p1, &base).distance(ecef_to_enu(&p2, &base));
        worst = worst.max((enu - chord).abs() / chord);
    }
    check(worst <= ENU_REL_TOL, format!("worst relative error {worst:e}"))?;
    Ok(format!(
        "{ENU_PAIRS} pairs about ({:.3}, {:.3}, {:.0} m), worst relative {worst:.1e}",
        base.lat, base.lon, base.alt
    ))
}

fn qos_semantics() -> Verdict {
    let bus = Bus::new();
    let n = bus.create_node("spot", "driver", BTreeMap::new()).map_err(|e| e.to_string())?;
    let p = n.advertise("burst", QosProfile::default()).unwrap();
    let s = n.subscribe("burst", QosProfile::default()).unwrap();
    for i in 0..BURST {
        p.publish(i as f64, &(i as u32).to_le_bytes()).unwrap();
    }
    let got = s.drain().unwrap();
    check(
        got.len() == 1 && got[0].payload == ((BURST - 1) as u32).to_le_bytes(),
        format!("keep-last-1 held {} messages", got.len()),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut trials = 0;
    for _ in 0..50 {
        let bus = Bus::new();
        let names: Vec<String> = (0..rng.random_range(2..6)).map(|i| format!("a{i}x{}", rng.random::<u16>())).collect();
        let topic = ["gps/fix", "cmd_vel", "status"][rng.random_range(0..3)];
        let mut subs = Vec::new();
        let mut pubs = Vec::new();
        for ns in &names {
            let node = bus.create_node(ns, "n", BTreeMap::new()).unwrap();
            pubs.push(node.advertise(topic, QosProfile::reliable(1)).unwrap());
            subs.push(node.subscribe(topic, QosProfile::reliable(64)).unwrap());
        }
        for (i, p) in pubs.iter().enumerate() {
            p.publish(0.0, names[i].as_bytes()).unwrap();
        }
        for (i, s) in subs.iter().enumerate() {
            let got = s.drain().unwrap();
            check(
                got.len() == 1 && got[0].payload == names[i].as_bytes(),
                format!("namespace {} saw foreign traffic", names[i]),
            )?;
            trials += 1;
        }
    }

    let start = Instant::now();
    let slow = n.subscribe("flood", QosProfile::reliable(16)).unwrap();
    let fp = n.advertise("flood", QosProfile::default()).unwrap();
    for i in 0..NON_BLOCKING_PUBLISHES {
        fp.publish(i as f64, b"x").unwrap();
    }
    let held = slow.drain().unwrap().len();
    check(held == 16, format!("never-taking subscriber held {held}"))?;
    Ok(format!(
        "burst keeps last; {trials} isolated subscriptions; {NON_BLOCKING_PUBLISHES} publishes in {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn random_quat(rng: &mut ChaCha8Rng) -> Quat {
    let axis = random_offset(rng, 1.0);
    let axis = if axis.norm() < 1e-6 { Vec3::new(0.0, 0.0, 1.0) } else { axis };
    Quat::from_axis_angle(axis, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

fn random_transform(rng: &mut ChaCha8Rng, parent: &FrameId, child: &FrameId, stamp: f64) -> Transform {
    Transform::new(parent.clone(), child.clone(), random_offset(rng, 5.0), random_quat(rng), stamp)
}

fn path_to_root(tree: &TransformTree, f: &FrameId) -> Vec<FrameId> {
    let mut path = vec![f.clone()];
    while let Some(p) = tree.parent_of(path.last().unwrap()) {
        path.push(p.clone());
    }
    path
}

fn tf_close(a: &Transform, b: &Transform) -> bool {
    (a.translation - b.translation).norm() <= TF_TOL && a.rotation.angle_to(b.rotation) <= TF_TOL
}

type Mat4 = [[f64; 4]; 4];

fn matrix(t: &Transform) -> Mat4 {
    let q = t.rotation;
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y), t.translation.x],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x), t.translation.y],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y), t.translation.z],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

fn matmul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn tf_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let stamps = [0.0, 4.0, 8.0];
    let mut lookups = 0;
    for _ in 0..TF_TREES {
        let n = rng.random_range(2..=TF_MAX_FRAMES);
        let frames: Vec<FrameId> = (0..n).map(|i| FrameId::new(format!("f{i}")).unwrap()).collect();
        let mut tree = TransformTree::new();
        let mut stored = Vec::new();
        for i in 1..n {
            let parent = &frames[rng.random_range(0..i)];
            for &t in &stamps {
                let tr = random_transform(&mut rng, parent, &frames[i], t);
                tree.set_transform(tr.clone()).map_err(|e| e.to_string())?;
                stored.push(tr);
            }
        }
        for tr in &stored {
            let got = tree.lookup(&tr.parent, &tr.child, tr.stamp).map_err(|e| e.to_string())?;
            check(
                got.translation == tr.translation
                    && got.rotation.canonical().angle_to(tr.rotation.canonical()) <= TF_ROT_ENDPOINT_TOL,
                format!("endpoint mismatch on {} at {}", tr.child, tr.stamp),
            )?;
        }
        for _ in 0..20 {
            let a = &frames[rng.random_range(0..n)];
            let c = &frames[rng.random_range(0..n)];
            let at = rng.random_range(0.0..=8.0);
            let ac = tree.lookup(a, c, at).map_err(|e| e.to_string())?;
            let ca = tree.lookup(c, a, at).map_err(|e| e.to_string())?;
            check(tf_close(&ac, &ca.invert()), format!("inverse symmetry {a}/{c}"))?;
            let (pa, pc) = (path_to_root(&tree, a), path_to_root(&tree, c));
            let on_path: Vec<&FrameId> = pa.iter().chain(pc.iter()).collect();
            let b = on_path[rng.random_range(0..on_path.len())];
            let ab = tree.lookup(a, b, at).map_err(|e| e.to_string())?;
            let bc = tree.lookup(b, c, at).map_err(|e| e.to_string())?;
            let composed = ab.compose(&bc).map_err(|e| e.to_string())?;
            // Frames above the common ancestor detour and come back; the
            // composition must still agree.
            check(tf_close(&ac, &composed), format!("path invariance {a}-{b}-{c}"))?;
            let (p, q) = (random_offset(&mut rng, 10.0), random_offset(&mut rng, 10.0));
            let d0 = (p - q).norm();
            let d1 = (ac.apply(p) - ac.apply(q)).norm();
            check((d1 - d0).abs() <= TF_TOL * d0.max(1.0), "norm preservation")?;
            lookups += 1;
        }
    }
    let mut worst = 0.0f64;
    let (fa, fb, fc) = (FrameId::new("a").unwrap(), FrameId::new("b").unwrap(), FrameId::new("c").unwrap());
    for _ in 0..MATRIX_PAIRS {
        let x = random_transform(&mut rng, &fa, &fb, 0.0);
        let y = random_transform(&mut rng, &fb, &fc, 0.0);
        let xy = x.compose(&y).map_err(|e| e.to_string())?;
        let m = matmul(&matrix(&x), &matrix(&y));
        let p = random_offset(&mut rng, 10.0);
        let brute = Vec3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z + m[0][3],
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z + m[1][3],
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z + m[2][3],
        );
        worst = worst.max((xy.apply(p) - brute).norm());
    }
    check(worst <= TF_TOL, format!("matrix oracle worst {worst:e}"))?;
    Ok(format!("{TF_TREES} trees, {lookups} lookup triples, {MATRIX_PAIRS} matrix pairs (worst {worst:.1e} m)"))
}

fn run_and_analyze(spec: &ExperimentSpec) -> Result<(bench::BagContents, AnalyzeOptions, bench::Analysis), String> {
    let bytes = bench::run_experiment(spec).map_err(|e| e.to_string())?;
    let recs = bagfmt::decode(&bytes).map_err(|e| e.to_string())?;
    let c = bench::read_experiment_bag(&recs).map_err(|e| e.to_string())?;
    let opts = AnalyzeOptions::from_meta(c.meta.as_ref().ok_or("bag lacks experiment description")?);
    let a = bench::analyze(&c.fixes, &opts).map_err(|e| e.to_string())?;
    Ok((c, opts, a))
}

fn static_envelope() -> Verdict {
    let mut worst = 0.0f64;
    let mut min_tight = 4;
    for seed in 1..=STATIC_SEEDS {
        let (_, _, a) = run_and_analyze(&ExperimentSpec::preset(ExperimentKind::Static, seed))?;
        let errs: Vec<f64> = a.report.sides.iter().map(|s| s.mean_error.abs()).collect();
        check(errs.len() == 4, format!("seed {seed}: {} sides", errs.len()))?;
        let tight = errs.iter().filter(|&&e| e <= TIGHT_SIDE_M).count();
        worst = errs.iter().copied().fold(worst, f64::max);
        min_tight = min_tight.min(tight);
        check(
            errs.iter().all(|&e| e <= MEAN_ERROR_MAX_M),
            format!("seed {seed}: side mean errors {errs:?}"),
        )?;
        check(tight >= TIGHT_SIDES_MIN, format!("seed {seed}: only {tight} sides within {TIGHT_SIDE_M} m"))?;
        check(a.report.stable, format!("seed {seed}: unstable"))?;
    }
    Ok(format!(
        "{STATIC_SEEDS} seeds: worst side mean error {worst:.3} m, at least {min_tight} sides within {TIGHT_SIDE_M} m, all stable"
    ))
}

fn disturbance_transients() -> Verdict {
    let mut twist_mags = Vec::new();
    for seed in SEEDS {
        let spec = ExperimentSpec::preset(ExperimentKind::StaticDisturbed, seed);
        let (_, _, a) = run_and_analyze(&spec)?;
        check(a.report.within_20cm, format!("seed {seed}: within_20cm false outside windows"))?;
        for s in &a.report.sides {
            for p in &s.peaks {
                check(
                    spec.windows
                        .iter()
                        .any(|w| p.stamp >= w.start - WINDOW_ALIGN_S && p.stamp <= w.end + WINDOW_ALIGN_S),
                    format!("seed {seed}: {} peak at {:.2} s outside every window", s.side, p.stamp),
                )?;
            }
        }
        for side in [Side::Top, Side::Right] {
            let s = a.report.side(side).ok_or("missing side")?;
            for start in TWIST_STARTS {
                let p = s
                    .peaks
                    .iter()
                    .find(|p| (p.stamp - start).abs() <= 2.0 + WINDOW_ALIGN_S)
                    .ok_or(format!("seed {seed}: no {side} peak near {start} s"))?;
                check(
                    (p.magnitude - TWIST_M).abs() <= TWIST_TOL_M,
                    format!("seed {seed}: {side} twist at {start} s has magnitude {:.3}", p.magnitude),
                )?;
                twist_mags.push(p.magnitude);
            }
        }
    }
    let lo = twist_mags.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = twist_mags.iter().copied().fold(0.0, f64::max);
    Ok(format!(
        "{} seeds: all peaks inside windows, twist peaks {lo:.3}..{hi:.3} m, within_20cm outside windows",
        SEEDS.len()
    ))
}

fn rotation_obstruction() -> Verdict {
    let mut seen = Vec::new();
    for seed in SEEDS {
        let (_, _, a) = run_and_analyze(&ExperimentSpec::preset(ExperimentKind::Rotation, seed))?;
        let r = &a.report;
        for (side, expected) in [(Side::Top, OBSTRUCTION_M[0]), (Side::Right, OBSTRUCTION_M[1])] {
            let s = r.side(side).ok_or("missing side")?;
            let top = s
                .peaks
                .iter()
                .map(|p| p.magnitude)
                .fold(0.0, f64::max);
            check(
                (top - expected).abs() <= OBSTRUCTION_TOL_M,
                format!("seed {seed}: {side} peak {top:.3} m, expected {expected}"),
            )?;
            check(
                s.max_abs_error <= expected + OBSTRUCTION_TOL_M,
                format!("seed {seed}: {side} error {:.3} exceeds the obstruction", s.max_abs_error),
            )?;
            seen.push(top);
        }
        for side in [Side::Bottom, Side::Left] {
            let s = r.side(side).ok_or("missing side")?;
            check(s.peaks.is_empty(), format!("seed {seed}: spurious {side} peaks {:?}", s.peaks))?;
            check(
                s.max_abs_error <= ELSEWHERE_MAX_M,
                format!("seed {seed}: {side} error {:.3} m", s.max_abs_error),
            )?;
        }
        check(r.within_20cm, format!("seed {seed}: within_20cm false outside the obstruction"))?;
    }
    Ok(format!(
        "{} seeds: obstruction peaks {:?} m on top/right only",
        SEEDS.len(),
        seen.iter().map(|m| format!("{m:.2}")).collect::<Vec<_>>()
    ))
}

fn translation_run() -> Verdict {
    let clean_spec = ExperimentSpec::preset(ExperimentKind::TranslationSquare, 1).noiseless();
    let (clean, opts, _) = run_and_analyze(&clean_spec)?;
    let clean_path = bench::centroid_path(&clean.fixes, &opts.corners, &opts.base);
    let len = path_length(&clean_path);
    check(
        (len - TRANSLATION_TOTAL_M).abs() <= TRANSLATION_TOL_M,
        format!("noiseless centroid path {len:.4} m"),
    )?;
    let mut worst_rms = 0.0f64;
    for seed in SEEDS {
        let (noisy, opts, a) = run_and_analyze(&ExperimentSpec::preset(ExperimentKind::TranslationSquare, seed))?;
        check(a.report.within_20cm, format!("seed {seed}: within_20cm false"))?;
        check(a.report.sides.len() == 4, "all four sides judged")?;
        let path = bench::centroid_path(&noisy.fixes, &opts.corners, &opts.base);
        let rms = bench::path_rms_deviation(&path, &clean_path).ok_or("no common stamps")?;
        check(rms < CENTROID_RMS_MAX_M, format!("seed {seed}: centroid RMS deviation {rms:.3} m"))?;
        worst_rms = worst_rms.max(rms);
    }
    Ok(format!(
        "noiseless centroid path {len:.4} m; {} noisy seeds within 20 cm, centroid RMS <= {worst_rms:.3} m",
        SEEDS.len()
    ))
}

fn bag_round_trip() -> Verdict {
    let spec = ExperimentSpec::preset(ExperimentKind::StaticDisturbed, 9);
    let first = bench::run_experiment(&spec).map_err(|e| e.to_string())?;
    let second = bench::run_experiment(&spec).map_err(|e| e.to_string())?;
    check(first == second, "same spec and seed gave different bags")?;

    let records = bagfmt::decode(&first).map_err(|e| e.to_string())?;
    let bus = Bus::new();
    let rec = Recorder::new(&bus, &["/**"]).map_err(|e| e.to_string())?;
    bag::replay(&records, &bus, ReplaySpeed::Fast).map_err(|e| e.to_string())?;
    let again = rec.into_bytes().map_err(|e| e.to_string())?;
    check(again == first, "record -> replay -> record changed the bag")?;

    let c = bench::read_experiment_bag(&records).map_err(|e| e.to_string())?;
    let opts = AnalyzeOptions::from_meta(c.meta.as_ref().unwrap());
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let a = bench::analyze(&c.fixes, &opts).map_err(|e| e.to_string())?;
        let (mut d, mut r) = (Vec::new(), Vec::new());
        csvio::write_distances(&mut d, &a.distances).map_err(|e| e.to_string())?;
        csvio::write_report(&mut r, &a.report).map_err(|e| e.to_string())?;
        outputs.push((d, r));
    }
    check(outputs[0] == outputs[1], "analysis output differs between runs")?;
    Ok(format!(
        "{} records replayed identically; bags byte-identical ({} bytes); analysis CSV byte-identical",
        records.len(),
        first.len()
    ))
}

fn follow_behavior() -> Verdict {
    let mut parts = Vec::new();
    for (noiseless, bound) in [(true, FOLLOW_NOISELESS_MAX_M), (false, FOLLOW_NOISY_MAX_M)] {
        let scn = Scenario::straight_follow(7, noiseless);
        let out = scenario::run(&scn, None).map_err(|e| e.to_string())?;
        let c = &out.commands[0];
        check(
            c.mean_tracking_error < bound,
            format!("noiseless={noiseless}: mean tracking error {:.3} m", c.mean_tracking_error),
        )?;
        check(out.standoff_respected(&scn), format!("standoff violated: {:.3} m", c.min_separation))?;
        check(out.max_speed_ratio <= 1.0 + 1e-12, "speed bound exceeded")?;
        let expected = 1 + FIXES_PER_SECOND * scn.duration_s as u64;
        for (name, fixes, _) in &out.agents {
            check(*fixes == expected, format!("{name} published {fixes} fixes, expected {expected}"))?;
        }
        parts.push(format!(
            "{} {:.3} m (min sep {:.2} m)",
            if noiseless { "noiseless" } else { "noisy" },
            c.mean_tracking_error,
            c.min_separation
        ));
    }
    Ok(format!("{}; {FIXES_PER_SECOND} fixes/s/agent", parts.join(", ")))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("geodesy oracle equivalence", geodesy_oracle),
        ("ENU rigidity", enu_rigidity),
        ("QoS semantics", qos_semantics),
        ("TF correctness", tf_correctness),
        ("static experiment envelope", static_envelope),
        ("disturbance transients", disturbance_transients),
        ("rotation obstruction", rotation_obstruction),
        ("translation run", translation_run),
        ("bag round trip", bag_round_trip),
        ("follow behavior", follow_behavior),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = f();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("[PASS] {:>2}. {name} ({secs:.1} s): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name} ({secs:.1} s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
