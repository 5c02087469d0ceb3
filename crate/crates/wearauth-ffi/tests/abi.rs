//! Exercises the C ABI end to end: train a model through the library,
//! persist it, load it back through the FFI surface, and compare scores.

use std::ffi::{CStr, CString};

use wearauth::data::{ActivityLevel, Window};
use wearauth::features::{extract_features, BiometricCombo, FeatureMatrix};
use wearauth::pipeline::persist_model;
use wearauth::selection::select_ks;
use wearauth::svm::{train_binary, KernelSpec, TrainConfig};
use wearauth::synth::generate_dataset;

use wearauth_ffi::{
    wa_last_error_message, wa_model_decision_value, wa_model_feature_count, wa_model_free,
    wa_model_is_calibrated, wa_model_load_file, wa_model_load_json, wa_model_probability,
    wa_model_score_window, wa_model_subject_id, wa_string_free, WaModel, WaStatus,
};

fn toy_windows() -> Vec<Window> {
    let dataset = generate_dataset(3, 1200, 7).unwrap();
    let mut csv = Vec::new();
    wearauth::data::write_records_csv(&mut csv, &dataset.records).unwrap();
    let records = wearauth::data::parse_records(csv.as_slice()).unwrap();
    let aligned = wearauth::data::filter_aligned(&records);
    wearauth::data::segment_windows(&aligned.minutes, wearauth::data::ActivityPeriod::Sedentary)
}

fn trained_model_json() -> (String, Vec<Vec<f64>>, Vec<Window>) {
    let windows = toy_windows();
    let combo = BiometricCombo::parse("CM").unwrap();
    let matrix = FeatureMatrix::from_windows(&windows, &combo, false).unwrap();
    let spec = select_ks(&matrix, 0.05, 0.5).unwrap();
    let selected = matrix.select(&spec.selected).unwrap();

    let by_subject = selected.rows_by_subject();
    let target = by_subject.keys().next().unwrap().clone();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (sid, rows) in &by_subject {
        for &r in rows.iter().take(40) {
            x.push(selected.values[r].clone());
            y.push(if *sid == target { 1.0 } else { -1.0 });
        }
    }
    let mut model = train_binary(&x, &y, &KernelSpec::quadratic(), &TrainConfig::default()).unwrap();
    model.subject_id = target;
    model.feature_set = Some(spec);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    persist_model(&model, &path).unwrap();
    let json = std::fs::read_to_string(&path).unwrap();

    let probes: Vec<Vec<f64>> = x.iter().take(20).cloned().collect();
    (json, probes, windows)
}

unsafe fn load(json: &str) -> *mut WaModel {
    let cjson = CString::new(json).unwrap();
    let mut handle: *mut WaModel = std::ptr::null_mut();
    assert_eq!(wa_model_load_json(cjson.as_ptr(), &mut handle), WaStatus::WaOk);
    assert!(!handle.is_null());
    handle
}

#[test]
fn ffi_scores_match_native_scores() {
    let (json, probes, _) = trained_model_json();
    let native = wearauth::pipeline::load_model_json_versioned(&json).unwrap();

    unsafe {
        let handle = load(&json);
        assert_eq!(wa_model_feature_count(handle), native.n_features);
        assert_eq!(wa_model_is_calibrated(handle), i32::from(native.platt.is_some()));

        let sid = wa_model_subject_id(handle);
        assert_eq!(
            CStr::from_ptr(sid).to_str().unwrap(),
            native.subject_id.as_str()
        );
        wa_string_free(sid);

        for probe in &probes {
            let mut value = f64::NAN;
            assert_eq!(
                wa_model_decision_value(handle, probe.as_ptr(), probe.len(), &mut value),
                WaStatus::WaOk
            );
            let expected = native.decision_value(probe).unwrap();
            assert!((value - expected).abs() <= 1e-12);

            if native.platt.is_some() {
                let mut p = f64::NAN;
                assert_eq!(
                    wa_model_probability(handle, probe.as_ptr(), probe.len(), &mut p),
                    WaStatus::WaOk
                );
                assert!((p - native.predict_proba(probe).unwrap()).abs() <= 1e-12);
            }
        }
        wa_model_free(handle);
    }
}

#[test]
fn ffi_scores_raw_windows() {
    let (json, _, windows) = trained_model_json();
    let native = wearauth::pipeline::load_model_json_versioned(&json).unwrap();
    let names = &native.feature_set.as_ref().unwrap().selected;

    unsafe {
        let handle = load(&json);
        for w in windows.iter().take(10) {
            let mut value = f64::NAN;
            let status = wa_model_score_window(
                handle,
                w.heart_rate.as_ptr(),
                w.calories.as_ptr(),
                w.met.as_ptr(),
                w.steps.as_ptr(),
                0,
                0,
                &mut value,
            );
            assert_eq!(status, WaStatus::WaOk);
            let features = wearauth::features::extract_named(w, names).unwrap();
            let expected = native.decision_value(&features).unwrap();
            assert!((value - expected).abs() <= 1e-12);
        }
        wa_model_free(handle);
    }
}

#[test]
fn ffi_rejects_bad_inputs_with_specific_codes() {
    let (json, probes, _) = trained_model_json();
    unsafe {
        let handle = load(&json);

        // wrong dimension
        let mut value = 0.0;
        let short = [1.0, 2.0];
        assert_eq!(
            wa_model_decision_value(handle, short.as_ptr(), short.len(), &mut value),
            WaStatus::WaErrDimension
        );
        let msg = CStr::from_ptr(wa_last_error_message()).to_str().unwrap();
        assert!(msg.contains("features"), "message: {msg}");

        // bad activity level
        let w = [0.0; 5];
        assert_eq!(
            wa_model_score_window(
                handle,
                w.as_ptr(),
                w.as_ptr(),
                w.as_ptr(),
                w.as_ptr(),
                7,
                0,
                &mut value
            ),
            WaStatus::WaErrBadArgument
        );

        // parse failures
        let garbage = CString::new("{not json").unwrap();
        let mut out: *mut WaModel = std::ptr::null_mut();
        assert_eq!(
            wa_model_load_json(garbage.as_ptr(), &mut out),
            WaStatus::WaErrParse
        );
        let missing = CString::new("/no/such/file.json").unwrap();
        assert_eq!(
            wa_model_load_file(missing.as_ptr(), &mut out),
            WaStatus::WaErrIo
        );

        // future schema version
        let mut doc: serde_json::Value = serde_json::from_str(&json).unwrap();
        doc["schema_version"] = serde_json::json!(99);
        let future = CString::new(doc.to_string()).unwrap();
        assert_eq!(
            wa_model_load_json(future.as_ptr(), &mut out),
            WaStatus::WaErrSchemaVersion
        );

        // valid probe still works after the failures
        let mut ok_value = 0.0;
        assert_eq!(
            wa_model_decision_value(handle, probes[0].as_ptr(), probes[0].len(), &mut ok_value),
            WaStatus::WaOk
        );
        wa_model_free(handle);
    }
}

#[test]
fn header_exports_the_surface() {
    let header = std::fs::read_to_string(
        std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/wearauth.h"),
    )
    .expect("generated header");
    for symbol in [
        "wa_model_load_file",
        "wa_model_load_json",
        "wa_model_free",
        "wa_model_decision_value",
        "wa_model_probability",
        "wa_model_score_window",
        "wa_last_error_message",
        "WA_ERR_SCHEMA_VERSION",
    ] {
        assert!(header.contains(symbol), "header missing {symbol}");
    }
}

#[test]
fn extraction_helper_used_by_window_scoring_matches_library() {
    // guards the equivalence the window-scoring path relies on
    let w = &toy_windows()[0];
    let combo = BiometricCombo::parse("CM").unwrap();
    let fv = extract_features(w, &combo, false).unwrap();
    let named = wearauth::features::extract_named(w, &fv.names).unwrap();
    assert_eq!(fv.values, named);
    assert_eq!(w.activity_level, ActivityLevel::Sedentary);
}
