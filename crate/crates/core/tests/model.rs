use detdiag::synth::{generate, Profile, SynthConfig};
use detdiag::{Dataset, DetectionSet};
use proptest::prelude::*;

fn small(images: usize, objects: usize) -> SynthConfig {
    SynthConfig {
        images,
        objects_per_image: objects,
        ignore_rate: 0.2,
        background_per_image: 1,
        ..SynthConfig::for_profile(Profile::Jittered)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dataset_and_detections_round_trip(seed in 0u64..10_000, images in 1usize..6, objects in 1usize..8) {
        let synth = generate(seed, None, &small(images, objects)).unwrap();
        let gt = synth.dataset.to_json();
        let tax = synth.dataset.taxonomy().to_json();
        let back = Dataset::from_json(&gt, &tax).unwrap();
        prop_assert_eq!(back.images(), synth.dataset.images());
        prop_assert_eq!(back.objects(), synth.dataset.objects());
        prop_assert_eq!(back.categories(), synth.dataset.categories());
        prop_assert_eq!(back.to_json(), gt);

        let dets = DetectionSet::from_json(&synth.detections.to_json(), &back).unwrap();
        prop_assert_eq!(dets, synth.detections);
    }

    #[test]
    fn detection_order_is_independent_of_input_order(seed in 0u64..10_000, rot in 0usize..50) {
        let synth = generate(seed, None, &small(3, 5)).unwrap();
        let mut shuffled = synth.detections.detections().to_vec();
        let n = shuffled.len();
        shuffled.rotate_left(rot % n);
        shuffled.reverse();
        let again = DetectionSet::new(synth.detections.detector(), shuffled, &synth.dataset).unwrap();
        prop_assert_eq!(again.detections(), synth.detections.detections());
    }
}

#[test]
fn synth_is_reproducible() {
    let cfg = SynthConfig::for_profile(Profile::Confused);
    let a = generate(5, Some(Profile::Confused), &cfg).unwrap();
    let b = generate(5, Some(Profile::Confused), &cfg).unwrap();
    assert_eq!(a.dataset.to_json(), b.dataset.to_json());
    assert_eq!(a.detections, b.detections);
    assert_eq!(a.manifest, b.manifest);
    let c = generate(6, Some(Profile::Confused), &cfg).unwrap();
    assert_ne!(a.detections, c.detections);
}

#[test]
fn shipped_voc_taxonomy_matches_builtin_groups() {
    let text = include_str!("../data/voc_taxonomy.json");
    let tax = detdiag::SimilarityTaxonomy::from_json(text).unwrap();
    assert_eq!(tax.groups(), &detdiag::synth::voc_groups());
    assert!(tax.similar("cat", "dog"));
    assert!(!tax.similar("cat", "car"));
    assert_eq!(tax.group_of("person"), None);
}
