use hmas_core::{FrameId, Quat, Transform, TransformTree, Vec3};
use proptest::prelude::*;

const TOL: f64 = 1e-9;
const STAMPS: [f64; 3] = [0.0, 4.0, 8.0];

#[derive(Debug, Clone)]
struct EdgeSpec {
    parent: usize,
    samples: [(Vec3, Quat); 3],
}

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    [-r..r, -r..r, -r..r].prop_map(Vec3::from)
}

fn quat() -> impl Strategy<Value = Quat> {
    (vec3(1.0), -3.1..3.1f64).prop_map(|(axis, angle)| {
        let axis = if axis.norm() < 1e-3 { Vec3::new(0.0, 0.0, 1.0) } else { axis };
        Quat::from_axis_angle(axis, angle)
    })
}

/// Frame `i + 1` hangs below a frame with a lower index, so every draw is a tree.
fn tree() -> impl Strategy<Value = Vec<EdgeSpec>> {
    (1usize..50).prop_flat_map(|n| {
        (0..n)
            .map(|i| {
                (0..=i, [(vec3(5.0), quat()), (vec3(5.0), quat()), (vec3(5.0), quat())])
                    .prop_map(|(parent, samples)| EdgeSpec { parent, samples })
            })
            .collect::<Vec<_>>()
    })
}

fn frame(i: usize) -> FrameId {
    FrameId::new(format!("f{i}")).unwrap()
}

fn build(edges: &[EdgeSpec]) -> TransformTree {
    let mut t = TransformTree::new();
    for (i, e) in edges.iter().enumerate() {
        for (k, (tr, rot)) in e.samples.iter().enumerate() {
            t.set_transform(Transform::new(frame(e.parent), frame(i + 1), *tr, *rot, STAMPS[k]))
                .unwrap();
        }
    }
    t
}

fn close(a: &Transform, b: &Transform) -> bool {
    (a.translation - b.translation).norm() <= TOL && a.rotation.angle_to(b.rotation) <= TOL
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lookups_compose_along_any_intermediate(
        edges in tree(),
        picks in [any::<prop::sample::Index>(), any::<prop::sample::Index>(), any::<prop::sample::Index>()],
        at in 0.0..=8.0f64,
    ) {
        let t = build(&edges);
        let n = edges.len() + 1;
        let (a, b, c) = (frame(picks[0].index(n)), frame(picks[1].index(n)), frame(picks[2].index(n)));
        let ac = t.lookup(&a, &c, at).unwrap();
        let ab = t.lookup(&a, &b, at).unwrap();
        let bc = t.lookup(&b, &c, at).unwrap();
        prop_assert!(close(&ac, &ab.compose(&bc).unwrap()));
        prop_assert!(close(&ac, &t.lookup(&c, &a, at).unwrap().invert()));
        prop_assert_eq!(&ac.parent, &a);
        prop_assert_eq!(&ac.child, &c);
    }

    #[test]
    fn lookups_are_rigid(edges in tree(), pick in any::<prop::sample::Index>(), p in vec3(10.0), q in vec3(10.0), at in 0.0..=8.0f64) {
        let t = build(&edges);
        let tr = t.lookup(&frame(0), &frame(pick.index(edges.len() + 1)), at).unwrap();
        let d0 = (p - q).norm();
        let d1 = (tr.apply(p) - tr.apply(q)).norm();
        prop_assert!((d1 - d0).abs() <= TOL * d0.max(1.0));
        prop_assert!((tr.rotation.norm() - 1.0).abs() <= TOL);
    }

    #[test]
    fn stored_samples_come_back_exactly(edges in tree()) {
        let t = build(&edges);
        for (i, e) in edges.iter().enumerate() {
            for (k, (tr, rot)) in e.samples.iter().enumerate() {
                let got = t.lookup(&frame(e.parent), &frame(i + 1), STAMPS[k]).unwrap();
                prop_assert_eq!(got.translation, *tr);
                prop_assert_eq!(got.rotation, *rot);
            }
        }
    }

    #[test]
    fn interpolated_translation_stays_on_segment(edges in tree(), alpha in 0.0..=1.0f64) {
        let t = build(&edges);
        let e = &edges[0];
        let got = t.lookup(&frame(e.parent), &frame(1), 4.0 * alpha).unwrap();
        let want = e.samples[0].0.lerp(e.samples[1].0, alpha);
        prop_assert!((got.translation - want).norm() <= TOL);
    }
}
