use pcgeo::codec::MergeFlavor;
use pcgeo::pipeline::{decode_cloud, encode_cloud, missing_points, PipelineParams};
use pcgeo::pointcloud::{load_ply, save_ply, voxelize};
use pcgeo::projection::ProjectionParams;
use pcgeo::synth::{generate, SynthKind, SynthParams};

fn params(qp: u8, merge: MergeFlavor) -> PipelineParams {
    let mut p = PipelineParams {
        projection: ProjectionParams {
            frame_width: 128,
            ..Default::default()
        },
        ..Default::default()
    };
    p.codec.qp = qp;
    p.codec.merge = merge;
    p
}

#[test]
fn ply_file_round_trip_keeps_points_and_normals() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cube.ply");
    let cloud = generate(SynthKind::Cube, &SynthParams::default()).unwrap();
    save_ply(&path, &cloud).unwrap();
    let raw = load_ply(&path).unwrap();
    assert_eq!(raw.bit_depth, Some(cloud.bit_depth()));
    let back = voxelize(&raw, cloud.bit_depth()).unwrap();
    assert_eq!(back.points(), cloud.points());
    if let (Some(a), Some(b)) = (back.normals(), cloud.normals()) {
        for (x, y) in a.iter().zip(b) {
            assert!(x.as_array().iter().zip(y.as_array()).all(|(p, q)| (p - q).abs() < 1e-6));
        }
    }
}

#[test]
fn decoded_cloud_equals_encoder_reconstruction() {
    for kind in SynthKind::ALL {
        let cloud = generate(kind, &SynthParams::default()).unwrap();
        for (qp, merge) in [(16, MergeFlavor::Om), (32, MergeFlavor::Baseline), (44, MergeFlavor::NonOm)] {
            let enc = encode_cloud(&cloud, &params(qp, merge)).unwrap();
            let (decoded, info) = decode_cloud(&enc.encoded.bitstream).unwrap();
            assert_eq!(decoded.points(), enc.recon.points(), "{kind} qp {qp}");
            assert_eq!(info.config.qp, qp);
            assert_eq!(info.config.merge, merge);
        }
    }
}

#[test]
fn finer_qp_loses_fewer_points() {
    let cloud = generate(SynthKind::Wavy, &SynthParams::default()).unwrap();
    let missed: Vec<usize> = [40, 28, 16, 4]
        .iter()
        .map(|&qp| {
            let enc = encode_cloud(&cloud, &params(qp, MergeFlavor::Om)).unwrap();
            missing_points(&cloud, &enc.recon)
        })
        .collect();
    assert!(missed.windows(2).all(|w| w[1] <= w[0]), "{missed:?}");
    assert!(missed[3] < missed[0], "{missed:?}");
}
