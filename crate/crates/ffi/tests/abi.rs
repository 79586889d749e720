use std::ffi::{CStr, CString};
use std::ptr;

use stagecraft_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(stc_last_error()) }.to_string_lossy().into_owned()
}

fn simulated(seed: u64, n: usize) -> (*mut StcModel, *mut StcDataset) {
    let mut model = ptr::null_mut();
    let mut data = ptr::null_mut();
    let status = unsafe { stc_simulate(4, ptr::null(), 0.5, n, seed, &mut model, &mut data) };
    assert_eq!(status, StcStatus::Ok);
    (model, data)
}

#[test]
fn learn_score_and_free() {
    let (truth, data) = simulated(5, 2000);
    unsafe {
        assert_eq!(stc_dataset_n_rows(data), 2000);
        assert_eq!(stc_dataset_n_vars(data), 4);
        let algo = CString::new("total").unwrap();
        let order = CString::new("X1,X2,X3,X4").unwrap();
        let mut model = ptr::null_mut();
        assert_eq!(stc_learn(data, algo.as_ptr(), order.as_ptr(), 0.0, &mut model), StcStatus::Ok);
        assert_eq!(stc_model_is_simple(model), 1);
        assert_eq!(stc_model_num_stages(model), stc_model_num_positions(model));

        let mut bic = f64::NAN;
        assert_eq!(stc_model_bic(model, data, &mut bic), StcStatus::Ok);
        assert!(bic.is_finite() && bic > 0.0);

        let mut d = f64::NAN;
        assert_eq!(stc_distance(model, truth, &mut d), StcStatus::Ok);
        assert!(d >= 0.0);
        assert_eq!(stc_distance(model, model, &mut d), StcStatus::Ok);
        assert_eq!(d, 0.0);

        stc_model_free(model);
        stc_model_free(truth);
        stc_dataset_free(data);
    }
}

#[test]
fn json_and_dot_round_trip() {
    let (truth, data) = simulated(7, 10);
    unsafe {
        let mut json = ptr::null_mut();
        assert_eq!(stc_model_to_json(truth, &mut json), StcStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(stc_model_from_json(json, &mut back), StcStatus::Ok);
        let mut d = f64::NAN;
        assert_eq!(stc_distance(truth, back, &mut d), StcStatus::Ok);
        assert_eq!(d, 0.0);
        stc_string_free(json);

        for ceg in [0, 1] {
            let mut dot = ptr::null_mut();
            assert_eq!(stc_model_to_dot(back, ceg, &mut dot), StcStatus::Ok);
            let text = CStr::from_ptr(dot).to_str().unwrap().to_string();
            assert!(text.starts_with(if ceg == 1 { "digraph ceg" } else { "digraph stagedtree" }));
            stc_string_free(dot);
        }

        let mut simple = ptr::null_mut();
        assert_eq!(stc_model_simplify(back, &mut simple), StcStatus::Ok);
        assert_eq!(stc_model_is_simple(simple), 1);
        stc_model_free(simple);
        stc_model_free(back);
        stc_model_free(truth);
        stc_dataset_free(data);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut model = ptr::null_mut();
        let bad = CString::new("{\"format\":\"stagedtree/0\"}").unwrap();
        assert_eq!(stc_model_from_json(bad.as_ptr(), &mut model), StcStatus::Parse);
        assert!(last_error().contains("stagedtree/0"));
        assert!(model.is_null());

        assert_eq!(stc_model_from_json(ptr::null(), &mut model), StcStatus::NullPointer);

        let cells = [0u32, 1, 1, 0];
        let ks = [2usize, 2];
        let mut data = ptr::null_mut();
        assert_eq!(stc_dataset_from_codes(2, 2, cells.as_ptr(), ks.as_ptr(), &mut data), StcStatus::Ok);
        let algo = CString::new("nope").unwrap();
        assert_eq!(stc_learn(data, algo.as_ptr(), ptr::null(), 0.0, &mut model), StcStatus::InvalidArgument);
        let algo = CString::new("marginal").unwrap();
        assert_eq!(stc_learn(data, algo.as_ptr(), ptr::null(), 0.0, &mut model), StcStatus::InvalidArgument);
        assert!(last_error().contains("order"));
        let bad_cells = [0u32, 5, 1, 0];
        let mut other = ptr::null_mut();
        assert_eq!(
            stc_dataset_from_codes(2, 2, bad_cells.as_ptr(), ks.as_ptr(), &mut other),
            StcStatus::Data
        );
        let path = CString::new("/nonexistent/file.csv").unwrap();
        assert_eq!(stc_dataset_read_csv(path.as_ptr(), 0, &mut other), StcStatus::Io);
        stc_dataset_free(data);
        stc_model_free(ptr::null_mut());
        stc_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/stagecraft.h");
    for name in [
        "typedef struct StcDataset StcDataset;",
        "typedef struct StcModel StcModel;",
        "STC_STATUS_OK = 0",
        "stc_last_error",
        "stc_dataset_read_csv",
        "stc_learn",
        "stc_model_bic",
        "stc_model_to_json",
        "stc_model_to_dot",
        "stc_distance",
        "stc_simulate",
        "stc_model_free",
        "stc_dataset_free",
        "stc_string_free",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
