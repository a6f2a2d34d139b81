use voxguide::framestream::{FrameCategory, FRAME_LEN};
use voxguide::pipeline::{compare, enhance, f64_to_pcm, transcode, CompareConfig, Modules};
use voxguide::signals::{self, NoiseKind};
use voxguide::{decode, encode, ControllerConfig, Error};

#[test]
fn dtx_off_is_sample_exact() {
    let clean = signals::mixed(6.0, 3);
    for kind in [NoiseKind::White, NoiseKind::Train, NoiseKind::Wind] {
        let input = f64_to_pcm(&signals::add_noise(&clean, kind, 5.0, 9));
        let (header, frames) = encode(&input, false);
        assert!(frames.iter().all(|f| f.category() == FrameCategory::Speech));
        let (decoded, _) = decode(&header, &frames).unwrap();
        assert_eq!(decoded, input, "{}", kind.as_str());
    }
}

#[test]
fn silent_input_sends_sid_every_eighth_frame() {
    let (_, frames) = encode(&[0i16; 40 * FRAME_LEN], true);
    for (i, f) in frames.iter().enumerate() {
        let want = if i % 8 == 0 {
            FrameCategory::Sid
        } else {
            FrameCategory::NoData
        };
        assert_eq!(f.category(), want, "frame {i}");
    }
}

#[test]
fn hangover_holds_five_frames_after_a_burst() {
    let mut pcm = vec![0i16; 60 * FRAME_LEN];
    for (n, s) in pcm[10 * FRAME_LEN..20 * FRAME_LEN].iter_mut().enumerate() {
        *s = (8000.0 * (n as f64 * 0.11).sin()) as i16;
    }
    let (_, frames) = encode(&pcm, true);
    let speech: Vec<usize> = frames
        .iter()
        .enumerate()
        .filter(|(_, f)| f.category() == FrameCategory::Speech)
        .map(|(i, _)| i)
        .collect();
    assert_eq!(speech, (10..25).collect::<Vec<_>>());
    assert_eq!(frames[25].category(), FrameCategory::Sid);
    assert_eq!(frames[33].category(), FrameCategory::Sid);
}

#[test]
fn compare_is_deterministic() {
    let clean = signals::speech_like(3.0, 5);
    let cfg = CompareConfig::default();
    let csv = || {
        let report = compare(&clean, &[NoiseKind::Car, NoiseKind::Cafeteria], 10.0, &cfg).unwrap();
        let mut out = Vec::new();
        report.write_csv(&mut out).unwrap();
        report.write_traces_csv(&mut out).unwrap();
        out
    };
    assert_eq!(csv(), csv());
}

#[test]
fn guided_enhancement_rejects_misaligned_states() {
    let clean = signals::speech_like(2.0, 1);
    let input = f64_to_pcm(&signals::add_noise(&clean, NoiseKind::White, 10.0, 1));
    let link = transcode(&input, true, &CompareConfig::default()).unwrap();
    let pcm: Vec<f64> = clean.samples.clone();
    let short = &link.states[..link.states.len() - 3];
    let err = enhance(
        &pcm,
        Some(short),
        Modules::BOTH,
        &ControllerConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::StateMisalignment { .. }), "{err}");
}

#[test]
fn guided_run_never_boosts_comfort_noise() {
    let clean = signals::speech_like(6.0, 2);
    let input = f64_to_pcm(&signals::add_noise(&clean, NoiseKind::Pink, 10.0, 4));
    let link = transcode(&input, true, &CompareConfig::default()).unwrap();
    let decoded = voxguide::pipeline::pcm_to_f64(&link.decoded);
    let out = enhance(
        &decoded,
        Some(&link.states),
        Modules::MDRP,
        &ControllerConfig::default(),
    )
    .unwrap();
    let trace = out.mdrp_trace.unwrap();
    let fade = ControllerConfig::default().crossfade_hops as usize;
    let mut since_entry = 0;
    for hop in &trace {
        if !link.states[hop.frame].frame_type.is_inactive() {
            since_entry = 0;
            continue;
        }
        since_entry += 1;
        if since_entry <= fade {
            continue;
        }
        for band in &hop.bands {
            assert!(band.target_gain_db <= 0.0, "hop {}: {:?}", hop.hop, band);
        }
    }
}
