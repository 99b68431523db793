//! C ABI for the infoconf toolkit.
//!
//! Conventions: every fallible function returns an `InfoconfStatus`
//! and writes its result through out-pointers; handles are opaque and
//! released with the matching `_free` function. No function panics
//! across the FFI boundary.

use std::ffi::{c_char, CStr};
use std::ptr;

use infoconf::calibration::CalibrationTable;
use infoconf::entropy;
use infoconf::infonet;

/// Status codes shared by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfoconfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An input was outside the mathematical domain of the operation.
    Domain = 2,
    /// A string argument was not valid UTF-8.
    Utf8 = 3,
    /// JSON input did not parse as the expected structure.
    Parse = 4,
}

/// A loaded calibration lookup table. Opaque; create with
/// `infoconf_table_from_json`, release with `infoconf_table_free`.
pub struct InfoconfTable(CalibrationTable);

/// Returns a static, null-terminated description of a status code.
#[no_mangle]
pub extern "C" fn infoconf_status_message(status: InfoconfStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        InfoconfStatus::Ok => b"ok\0",
        InfoconfStatus::NullPointer => b"null pointer argument\0",
        InfoconfStatus::Domain => b"argument outside the valid domain\0",
        InfoconfStatus::Utf8 => b"string argument is not valid UTF-8\0",
        InfoconfStatus::Parse => b"JSON did not parse as a calibration table\0",
    };
    msg.as_ptr().cast()
}

fn write_out(out: *mut f64, value: Result<f64, entropy::EntropyError>) -> InfoconfStatus {
    if out.is_null() {
        return InfoconfStatus::NullPointer;
    }
    match value {
        Ok(v) => {
            unsafe { *out = v };
            InfoconfStatus::Ok
        }
        Err(_) => InfoconfStatus::Domain,
    }
}

/// Sigmoid 1 / (1 + e^(-k / e)) for expectation e > 0.
#[no_mangle]
pub extern "C" fn infoconf_sigmoid(k: f64, e: f64, out: *mut f64) -> InfoconfStatus {
    write_out(out, entropy::sigmoid(k, e))
}

/// Confidence force -e ln(1 - p) for p in [0, 1).
#[no_mangle]
pub extern "C" fn infoconf_force_a(p: f64, e: f64, out: *mut f64) -> InfoconfStatus {
    write_out(out, entropy::force_a(p, e))
}

/// Counter-confidence force -e ln(p) for p in (0, 1].
#[no_mangle]
pub extern "C" fn infoconf_force_b(p: f64, e: f64, out: *mut f64) -> InfoconfStatus {
    write_out(out, entropy::force_b(p, e))
}

/// Net force -e ln((1 - p) / p) for p in (0, 1).
#[no_mangle]
pub extern "C" fn infoconf_net_force(p: f64, e: f64, out: *mut f64) -> InfoconfStatus {
    write_out(out, entropy::net_force(p, e))
}

/// Writes the two roots of p^2 + p - 1 = 0, the golden-ratio pair.
#[no_mangle]
pub extern "C" fn infoconf_golden_roots(
    out_positive: *mut f64,
    out_negative: *mut f64,
) -> InfoconfStatus {
    if out_positive.is_null() || out_negative.is_null() {
        return InfoconfStatus::NullPointer;
    }
    let (pos, neg) = entropy::golden_ratio_roots();
    unsafe {
        *out_positive = pos;
        *out_negative = neg;
    }
    InfoconfStatus::Ok
}

/// Inverse Lorentz factor sqrt(1 - (v/c)^2) for v/c in [0, 1).
#[no_mangle]
pub extern "C" fn infoconf_lorentz_factor(v_over_c: f64, out: *mut f64) -> InfoconfStatus {
    write_out(out, entropy::lorentz_factor(v_over_c))
}

/// Perceived-performance correction 1 / (1 + p_observed).
#[no_mangle]
pub extern "C" fn infoconf_perception_correction(
    observed_perf: f64,
    out: *mut f64,
) -> InfoconfStatus {
    write_out(out, entropy::perception_correction(observed_perf))
}

/// Neuron output value 1 / (1 + p_hat^(1 / i_c)).
#[no_mangle]
pub extern "C" fn infoconf_output_value(p_hat: f64, i_c: f64, out: *mut f64) -> InfoconfStatus {
    if out.is_null() {
        return InfoconfStatus::NullPointer;
    }
    match infonet::output_value(p_hat, i_c) {
        Ok(v) => {
            unsafe { *out = v };
            InfoconfStatus::Ok
        }
        Err(_) => InfoconfStatus::Domain,
    }
}

/// Parses a calibration-table JSON document (as written by the
/// `calibrate` command) into an opaque handle. On success the handle is
/// owned by the caller and must be released with `infoconf_table_free`.
#[no_mangle]
pub extern "C" fn infoconf_table_from_json(
    json: *const c_char,
    out: *mut *mut InfoconfTable,
) -> InfoconfStatus {
    if json.is_null() || out.is_null() {
        return InfoconfStatus::NullPointer;
    }
    let text = match unsafe { CStr::from_ptr(json) }.to_str() {
        Ok(t) => t,
        Err(_) => return InfoconfStatus::Utf8,
    };
    match CalibrationTable::from_json(text) {
        Ok(table) => {
            unsafe { *out = Box::into_raw(Box::new(InfoconfTable(table))) };
            InfoconfStatus::Ok
        }
        Err(_) => {
            unsafe { *out = ptr::null_mut() };
            InfoconfStatus::Parse
        }
    }
}

/// Maps a raw confidence through the table's monotone lookup;
/// out-of-range inputs clamp to the endpoint entries.
#[no_mangle]
pub extern "C" fn infoconf_table_map(
    table: *const InfoconfTable,
    raw: f64,
    out: *mut f64,
) -> InfoconfStatus {
    if table.is_null() || out.is_null() {
        return InfoconfStatus::NullPointer;
    }
    let table = unsafe { &*table };
    unsafe { *out = table.0.map(raw) };
    InfoconfStatus::Ok
}

/// Number of (bin, K_new) entries in the table.
#[no_mangle]
pub extern "C" fn infoconf_table_entry_count(table: *const InfoconfTable) -> usize {
    if table.is_null() {
        return 0;
    }
    unsafe { &*table }.0.entries.len()
}

/// Writes the table's recognition rate R, information content I_C, and
/// normalization expectation E_hat. Null out-pointers are skipped.
#[no_mangle]
pub extern "C" fn infoconf_table_terms(
    table: *const InfoconfTable,
    out_r: *mut f64,
    out_i_c: *mut f64,
    out_e_hat: *mut f64,
) -> InfoconfStatus {
    if table.is_null() {
        return InfoconfStatus::NullPointer;
    }
    let table = unsafe { &*table };
    if !out_r.is_null() {
        unsafe { *out_r = table.0.r };
    }
    if !out_i_c.is_null() {
        unsafe { *out_i_c = table.0.i_c };
    }
    if !out_e_hat.is_null() {
        unsafe { *out_e_hat = table.0.e_hat };
    }
    InfoconfStatus::Ok
}

/// Releases a table handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn infoconf_table_free(table: *mut InfoconfTable) {
    if !table.is_null() {
        drop(unsafe { Box::from_raw(table) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    #[test]
    fn sigmoid_through_ffi() {
        let mut out = 0.0;
        assert_eq!(infoconf_sigmoid(0.0, 1.0, &mut out), InfoconfStatus::Ok);
        assert_eq!(out, 0.5);
        assert_eq!(infoconf_sigmoid(0.0, 0.0, &mut out), InfoconfStatus::Domain);
        assert_eq!(
            infoconf_sigmoid(0.0, 1.0, std::ptr::null_mut()),
            InfoconfStatus::NullPointer
        );
    }

    #[test]
    fn forces_and_golden_roots() {
        let (mut a, mut b, mut net) = (0.0, 0.0, 0.0);
        assert_eq!(infoconf_force_a(0.25, 1.0, &mut a), InfoconfStatus::Ok);
        assert_eq!(infoconf_force_b(0.25, 1.0, &mut b), InfoconfStatus::Ok);
        assert_eq!(infoconf_net_force(0.25, 1.0, &mut net), InfoconfStatus::Ok);
        assert!((net - (a - b)).abs() < 1e-12);

        let (mut pos, mut neg) = (0.0, 0.0);
        assert_eq!(infoconf_golden_roots(&mut pos, &mut neg), InfoconfStatus::Ok);
        assert!((pos - (5.0_f64.sqrt() - 1.0) / 2.0).abs() < 1e-12);
        assert!((neg - (-1.0 - 5.0_f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn relativity_demos() {
        let mut out = 0.0;
        assert_eq!(infoconf_lorentz_factor(0.6, &mut out), InfoconfStatus::Ok);
        assert_eq!(out, 0.8);
        assert_eq!(infoconf_lorentz_factor(1.5, &mut out), InfoconfStatus::Domain);
        assert_eq!(
            infoconf_perception_correction(1.0 / 2.0_f64.sqrt(), &mut out),
            InfoconfStatus::Ok
        );
        assert!((out - 0.585_786_437_626_904_9).abs() < 1e-12);
    }

    #[test]
    fn output_value_boundary() {
        let mut out = 0.0;
        assert_eq!(infoconf_output_value(1.0, 2.0, &mut out), InfoconfStatus::Ok);
        assert_eq!(out, 0.5);
        assert_eq!(infoconf_output_value(-0.5, 2.0, &mut out), InfoconfStatus::Domain);
    }

    fn sample_table_json() -> CString {
        let samples = vec![
            ("s1", "a", "a", 0.2),
            ("s2", "b", "c", 0.4),
            ("s3", "b", "b", 0.6),
            ("s4", "a", "a", 0.8),
        ];
        let eval = infoconf::calibration::EvaluationSet::new(
            samples
                .iter()
                .map(|(id, t, _, _)| infoconf::calibration::LabeledSample {
                    sample_id: (*id).to_string(),
                    true_label: (*t).to_string(),
                })
                .collect(),
            samples
                .iter()
                .map(|(id, _, top, conf)| infoconf::calibration::RankedOutput {
                    sample_id: (*id).to_string(),
                    classifier_id: "c".to_string(),
                    ranking: vec![((*top).to_string(), *conf)],
                })
                .collect(),
        )
        .unwrap();
        let table = infoconf::calibration::calibrate(
            &eval,
            "c",
            &infoconf::calibration::BinningSpec::Distinct,
        )
        .unwrap();
        CString::new(table.to_json()).unwrap()
    }

    #[test]
    fn table_lifecycle() {
        let json = sample_table_json();
        let mut handle: *mut InfoconfTable = std::ptr::null_mut();
        assert_eq!(
            infoconf_table_from_json(json.as_ptr(), &mut handle),
            InfoconfStatus::Ok
        );
        assert!(!handle.is_null());
        assert_eq!(infoconf_table_entry_count(handle), 4);

        let (mut r, mut i_c, mut e_hat) = (0.0, 0.0, 0.0);
        assert_eq!(
            infoconf_table_terms(handle, &mut r, &mut i_c, &mut e_hat),
            InfoconfStatus::Ok
        );
        assert_eq!(r, 0.75);
        assert!(i_c > 0.0 && e_hat > 0.0);

        // The map is monotone and clamps outside the seen range.
        let mut lo = 0.0;
        let mut hi = 0.0;
        assert_eq!(infoconf_table_map(handle, 0.2, &mut lo), InfoconfStatus::Ok);
        assert_eq!(infoconf_table_map(handle, 0.8, &mut hi), InfoconfStatus::Ok);
        assert!(lo < hi);
        let mut clamped = 0.0;
        assert_eq!(infoconf_table_map(handle, -5.0, &mut clamped), InfoconfStatus::Ok);
        assert_eq!(clamped, lo);

        infoconf_table_free(handle);
        infoconf_table_free(std::ptr::null_mut());
    }

    #[test]
    fn parse_failures_report_status() {
        let mut handle: *mut InfoconfTable = std::ptr::null_mut();
        let bad = CString::new("{\"not\": \"a table\"}").unwrap();
        assert_eq!(
            infoconf_table_from_json(bad.as_ptr(), &mut handle),
            InfoconfStatus::Parse
        );
        assert!(handle.is_null());
        assert_eq!(
            infoconf_table_from_json(std::ptr::null(), &mut handle),
            InfoconfStatus::NullPointer
        );
        let msg = unsafe { CStr::from_ptr(infoconf_status_message(InfoconfStatus::Parse)) };
        assert!(msg.to_str().unwrap().contains("JSON"));
    }
}
