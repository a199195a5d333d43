use std::ffi::{CStr, CString};
use std::ptr;

use qembed_ffi::*;

fn last_error() -> String {
    let p = qembed_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn params_roundtrip() {
    unsafe {
        let values: Vec<f64> = (0..qembed_param_count()).map(|k| k as f64 * 0.1).collect();
        let mut p = ptr::null_mut();
        assert_eq!(qembed_params_from_array(values.as_ptr(), values.len(), &mut p), QembedStatus::Ok);
        let mut back = vec![0.0; 20];
        assert_eq!(qembed_params_copy_to(p, back.as_mut_ptr(), back.len()), QembedStatus::Ok);
        assert_eq!(back, values);
        assert_eq!(qembed_params_copy_to(p, back.as_mut_ptr(), 3), QembedStatus::BufferTooSmall);
        qembed_params_free(p);

        let mut q = ptr::null_mut();
        assert_eq!(qembed_params_from_array(values.as_ptr(), 5, &mut q), QembedStatus::InvalidArgument);
        assert!(q.is_null());
        assert!(last_error().contains('5'));
        assert_eq!(qembed_params_random(1, ptr::null_mut()), QembedStatus::NullPointer);
        qembed_params_free(ptr::null_mut());
    }
}

#[test]
fn embed_and_overlap_agree_with_library() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(qembed_params_random(7, &mut p), QembedStatus::Ok);
        let (x, y) = ([0.3, 1.1], [2.0, 0.4]);
        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        assert_eq!(qembed_embed(x.as_ptr(), p, re.as_mut_ptr(), im.as_mut_ptr()), QembedStatus::Ok);
        let norm: f64 = re.iter().zip(&im).map(|(a, b)| a * a + b * b).sum();
        assert!((norm - 1.0).abs() < 1e-12);

        let params = qembed::EmbeddingParams::random(7);
        let fx = qembed::FeatureVector::new(0.3, 1.1).unwrap();
        let fy = qembed::FeatureVector::new(2.0, 0.4).unwrap();
        let expected = qembed::overlap::overlap_exact(&fx, &fy, &params);
        let mut f = 0.0;
        let none = ptr::null();
        assert_eq!(qembed_overlap(x.as_ptr(), y.as_ptr(), p, QembedMethod::Exact, 0, 0, none, &mut f), QembedStatus::Ok);
        assert_eq!(f, expected);

        let name = CString::new("bogota").unwrap();
        let mut noise = ptr::null_mut();
        assert_eq!(qembed_noise_model_builtin(name.as_ptr(), &mut noise), QembedStatus::Ok);
        let s = qembed_overlap(x.as_ptr(), x.as_ptr(), p, QembedMethod::InversionTest, 4096, 3, noise, &mut f);
        assert_eq!(s, QembedStatus::Ok);
        assert!(f > 0.8 && f <= 1.0);
        let s = qembed_overlap(x.as_ptr(), y.as_ptr(), p, QembedMethod::Exact, 0, 0, noise, &mut f);
        assert_eq!(s, QembedStatus::InvalidArgument);
        qembed_noise_model_free(noise);

        let bad = CString::new("nowhere").unwrap();
        assert_eq!(qembed_noise_model_builtin(bad.as_ptr(), &mut noise), QembedStatus::UnknownDevice);
        assert!(last_error().contains("nowhere"));
        qembed_params_free(p);
    }
}

#[test]
fn train_and_predict() {
    unsafe {
        let features = [0.2, 0.3, 0.4, 0.1, 0.3, 0.2, 2.9, 2.7, 2.6, 3.0, 2.8, 2.8];
        let labels = [0usize, 0, 0, 1, 1, 1];
        let mut cfg = qembed_train_config_default();
        assert_eq!(cfg.epochs, 100);
        cfg.epochs = 30;
        cfg.seed = 5;
        for approach in [QembedApproach::Implicit, QembedApproach::Explicit] {
            let mut m = ptr::null_mut();
            let s = qembed_model_train(features.as_ptr(), labels.as_ptr(), 6, approach, &cfg, &mut m);
            assert_eq!(s, QembedStatus::Ok);
            assert_eq!(qembed_model_n_classes(m), 2);

            let mut history = [0.0; 31];
            let mut written = 0;
            assert_eq!(qembed_model_cost_history(m, history.as_mut_ptr(), 31, &mut written), QembedStatus::Ok);
            assert_eq!(written, 31);
            assert!(history[30] < history[0]);

            let mut f = [0.0; 2];
            let none = ptr::null();
            let s = qembed_model_classifying_vector(m, features.as_ptr(), QembedMethod::Exact, 0, 0, none, f.as_mut_ptr(), 2);
            assert_eq!(s, QembedStatus::Ok);
            let mut label = 9;
            assert_eq!(qembed_model_predict(m, features.as_ptr(), QembedMethod::Exact, 0, 0, none, &mut label), QembedStatus::Ok);
            assert_eq!(label, if f[1] > f[0] { 1 } else { 0 });

            let mut p = ptr::null_mut();
            assert_eq!(qembed_model_copy_params(m, &mut p), QembedStatus::Ok);
            qembed_params_free(p);
            qembed_model_free(m);
        }

        let mut m = ptr::null_mut();
        let one_class = [0usize; 6];
        let s = qembed_model_train(features.as_ptr(), one_class.as_ptr(), 6, QembedApproach::Implicit, ptr::null(), &mut m);
        assert_eq!(s, QembedStatus::InvalidArgument);
        let gap = [0usize, 0, 0, 2, 2, 2];
        let s = qembed_model_train(features.as_ptr(), gap.as_ptr(), 6, QembedApproach::Implicit, ptr::null(), &mut m);
        assert_eq!(s, QembedStatus::InvalidArgument);
        assert!(m.is_null());
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/qembed.h")).unwrap();
    for sym in [
        "qembed_last_error",
        "qembed_param_count",
        "qembed_train_config_default",
        "qembed_params_random",
        "qembed_params_from_array",
        "qembed_params_copy_to",
        "qembed_params_free",
        "qembed_noise_model_builtin",
        "qembed_noise_model_free",
        "qembed_embed",
        "qembed_overlap",
        "qembed_model_train",
        "qembed_model_n_classes",
        "qembed_model_cost_history",
        "qembed_model_classifying_vector",
        "qembed_model_predict",
        "qembed_model_copy_params",
        "qembed_model_free",
        "QEMBED_STATUS_OK",
        "QEMBED_METHOD_INVERSION_TEST",
        "typedef struct QembedModel QembedModel",
    ] {
        assert!(header.contains(sym), "{sym} missing from header");
    }
}
