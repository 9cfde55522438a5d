use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use soft_augment::data::{
    parse_cifar10, parse_cifar100, read_dataset, serialize_cifar10, serialize_cifar100, synth_shapes,
    write_dataset, LabeledDataset, NormalizationStats, CIFAR100_RECORD, CIFAR10_RECORD, CIFAR_PIXELS,
};
use soft_augment::{Error, RandomSource};

fn random_cifar_bytes(rng: &mut RandomSource, records: usize, record: usize, classes: usize) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(records * record);
    for _ in 0..records {
        for _ in 0..record - CIFAR_PIXELS {
            bytes.push(rng.index(classes) as u8);
        }
        bytes.extend((0..CIFAR_PIXELS).map(|_| rng.index(256) as u8));
    }
    bytes
}

#[test]
fn cifar10_bytes_round_trip() {
    let mut rng = RandomSource::new(1);
    let bytes = random_cifar_bytes(&mut rng, 5, CIFAR10_RECORD, 10);
    let ds = parse_cifar10(&bytes).unwrap();
    assert_eq!(ds.len(), 5);
    for img in &ds.images {
        assert!(img.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
    }
    assert_eq!(serialize_cifar10(&ds).unwrap(), bytes);
}

#[test]
fn cifar100_bytes_round_trip() {
    let mut rng = RandomSource::new(2);
    let mut bytes = random_cifar_bytes(&mut rng, 4, CIFAR100_RECORD, 100);
    // The serializer writes coarse labels as fine / 5.
    for rec in bytes.chunks_mut(CIFAR100_RECORD) {
        rec[0] = rec[1] / 5;
    }
    let ds = parse_cifar100(&bytes).unwrap();
    assert_eq!(ds.len(), 4);
    assert_eq!(serialize_cifar100(&ds).unwrap(), bytes);
}

#[test]
fn truncated_stream_reports_offset() {
    let mut bytes = vec![0u8; 2 * CIFAR10_RECORD + 1];
    bytes[0] = 3;
    match parse_cifar10(&bytes) {
        Err(Error::Parse { offset, .. }) => assert_eq!(offset, 6146),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(parse_cifar10(&[]).unwrap().is_empty());
}

fn pixel_hash(ds: &LabeledDataset) -> u64 {
    let mut h = DefaultHasher::new();
    for img in &ds.images {
        for p in img.pixels() {
            p.to_bits().hash(&mut h);
        }
    }
    ds.labels.hash(&mut h);
    h.finish()
}

#[test]
fn synth_shapes_is_seeded() {
    let a = synth_shapes(5, 4, 1).unwrap();
    let b = synth_shapes(5, 4, 1).unwrap();
    let c = synth_shapes(5, 4, 2).unwrap();
    assert_eq!(pixel_hash(&a), pixel_hash(&b));
    assert_ne!(pixel_hash(&a), pixel_hash(&c));
    assert_eq!(a.class_counts(), vec![5; 4]);
    for img in &a.images {
        assert!(img.pixels().iter().all(|p| (0.0..=1.0).contains(p)));
    }
}

fn nearest_centroid_error(train: &LabeledDataset, test: &LabeledDataset) -> f64 {
    let k = train.num_classes;
    let dim = train.images[0].len();
    let counts = train.class_counts();
    let mut centroids = vec![vec![0.0; dim]; k];
    for (img, &l) in train.images.iter().zip(&train.labels) {
        for (c, p) in centroids[l].iter_mut().zip(img.pixels()) {
            *c += p / counts[l] as f64;
        }
    }
    let wrong = test
        .images
        .iter()
        .zip(&test.labels)
        .filter(|(img, l)| {
            let dist = |c: &Vec<f64>| {
                c.iter()
                    .zip(img.pixels())
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
            };
            let best = (0..k)
                .min_by(|&a, &b| dist(&centroids[a]).total_cmp(&dist(&centroids[b])))
                .unwrap();
            best != **l
        })
        .count();
    wrong as f64 / test.len() as f64
}

#[test]
fn synth_shapes_nearest_centroid_is_accurate() {
    for seed in 0..3 {
        let train = synth_shapes(50, 4, 10 + seed).unwrap();
        let test = synth_shapes(25, 4, 20 + seed).unwrap();
        let err = nearest_centroid_error(&train, &test);
        eprintln!("seed {seed}: nearest-centroid error {err}");
        assert!(err < 0.3, "seed {seed}: nearest-centroid error {err}");
    }
}

#[test]
fn container_round_trip_and_normalization() {
    let ds = synth_shapes(3, 5, 4).unwrap();
    let mut buf = Vec::new();
    write_dataset(&ds, &mut buf).unwrap();
    let back = read_dataset(buf.as_slice()).unwrap();
    assert_eq!(pixel_hash(&back), pixel_hash(&ds));
    assert_eq!(back.num_classes, ds.num_classes);
    assert!(read_dataset(&buf[..buf.len() - 3]).is_err());

    let stats = NormalizationStats::from_dataset(&ds).unwrap();
    for img in &ds.images {
        let round = stats
            .denormalize_image(&stats.normalize_image(img).unwrap())
            .unwrap();
        for (a, b) in round.pixels().iter().zip(img.pixels()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
