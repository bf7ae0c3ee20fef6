use std::ffi::{c_char, CString};
use std::ptr;

use actinf::env::tmaze::{observation_index, CENTER, CUE_RIGHT, NO_REWARD};
use actinf::env::{build_tmaze_model, TMazeOptions};
use actinf::inference::{filter_step, History};
use actinf::model::model_to_json;
use actinf::policy::{policy_posterior, PolicyOptions};
use actinf_ffi::*;

struct Handle(*mut ActinfModel);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { actinf_model_free(self.0) }
    }
}

fn tmaze(absorbing: bool) -> Handle {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { actinf_model_tmaze(absorbing, &mut h) }, ActinfStatus::Ok);
    assert!(!h.is_null());
    Handle(h)
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { actinf_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn sizes_match_the_library_model() {
    let h = tmaze(false);
    let m = build_tmaze_model(TMazeOptions::default()).model;
    unsafe {
        assert_eq!(actinf_model_num_states(h.0), m.num_states());
        assert_eq!(actinf_model_num_observations(h.0), m.num_observations());
        assert_eq!(actinf_model_num_actions(h.0), 4);
        assert_eq!(actinf_model_horizon(h.0), 3);
        assert_eq!(actinf_num_policies(h.0, 1), 16);
        assert_eq!(actinf_num_policies(h.0, 2), 4);
        assert_eq!(actinf_model_num_states(ptr::null()), 0);
    }
}

#[test]
fn filtering_and_planning_agree_with_the_library() {
    let h = tmaze(false);
    let m = build_tmaze_model(TMazeOptions::default()).model;
    let o1 = observation_index(CENTER, NO_REWARD, CUE_RIGHT);
    let n = m.num_states();

    let mut d = vec![0.0; n];
    assert_eq!(unsafe { actinf_initial_belief(h.0, d.as_mut_ptr(), n) }, ActinfStatus::Ok);
    let mut q = vec![0.0; n];
    let status = unsafe { actinf_filter_step(h.0, d.as_ptr(), n, -1, o1, q.as_mut_ptr(), n) };
    assert_eq!(status, ActinfStatus::Ok);
    assert_eq!(q, filter_step(&m, &d, None, o1).unwrap());

    let mut probs = vec![0.0; 16];
    let mut count = 0usize;
    let status = unsafe {
        actinf_policy_posterior(h.0, q.as_ptr(), n, &o1, 1, ptr::null(), 0, probs.as_mut_ptr(), 16, &mut count)
    };
    assert_eq!(status, ActinfStatus::Ok);
    assert_eq!(count, 16);
    assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let expected = policy_posterior(&m, &q, &History::new(o1), None, PolicyOptions::default()).unwrap();
    assert_eq!(probs, expected.probabilities);
}

#[test]
fn errors_carry_codes_and_messages() {
    let h = tmaze(false);
    let n = unsafe { actinf_model_num_states(h.0) };
    let mut out = vec![0.0; n];
    let d = vec![1.0 / n as f64; n];
    unsafe {
        assert_eq!(actinf_model_tmaze(false, ptr::null_mut()), ActinfStatus::NullPointer);
        assert!(last_error().contains("out"));
        assert_eq!(
            actinf_filter_step(h.0, d.as_ptr(), n, -1, 10_000, out.as_mut_ptr(), n),
            ActinfStatus::IndexOutOfRange
        );
        assert!(!last_error().is_empty());
        assert_eq!(
            actinf_filter_step(h.0, d.as_ptr(), n, -1, 0, out.as_mut_ptr(), n - 1),
            ActinfStatus::BufferTooSmall
        );
        assert_eq!(
            actinf_filter_step(ptr::null(), d.as_ptr(), n, -1, 0, out.as_mut_ptr(), n),
            ActinfStatus::NullPointer
        );
        let mut count = 0usize;
        assert_eq!(
            actinf_policy_posterior(h.0, d.as_ptr(), n, &0, 1, ptr::null(), 0, out.as_mut_ptr(), 1, &mut count),
            ActinfStatus::BufferTooSmall
        );
        assert_eq!(count, 16);
        assert_eq!(actinf_initial_belief(h.0, out.as_mut_ptr(), n), ActinfStatus::Ok);
        assert_eq!(last_error(), "");
        actinf_model_free(ptr::null_mut());
    }
}

#[test]
fn message_is_truncated_to_the_buffer() {
    unsafe {
        actinf_model_tmaze(true, ptr::null_mut());
        let full = actinf_last_error_message(ptr::null_mut(), 0);
        assert!(full > 4);
        let mut buf = [0x7f as c_char; 4];
        assert_eq!(actinf_last_error_message(buf.as_mut_ptr(), 4), full);
        assert_eq!(buf[3], 0);
    }
}

#[test]
fn json_round_trip_through_handles() {
    let m = build_tmaze_model(TMazeOptions::literal()).model;
    let json = CString::new(model_to_json(&m).unwrap()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { actinf_model_from_json(json.as_ptr(), &mut h) }, ActinfStatus::Ok);
    let h = Handle(h);

    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().join("m.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { actinf_model_save(h.0, path.as_ptr()) }, ActinfStatus::Ok);
    let mut back = ptr::null_mut();
    assert_eq!(unsafe { actinf_model_load(path.as_ptr(), &mut back) }, ActinfStatus::Ok);
    let back = Handle(back);
    assert_eq!(unsafe { actinf_model_num_states(back.0) }, m.num_states());

    let bad = CString::new("{\"not\": \"a model\"}").unwrap();
    let mut none = ptr::null_mut();
    assert_eq!(unsafe { actinf_model_from_json(bad.as_ptr(), &mut none) }, ActinfStatus::Parse);
    assert!(none.is_null());
    let missing = CString::new("/no/such/model.json").unwrap();
    assert_eq!(unsafe { actinf_model_load(missing.as_ptr(), &mut none) }, ActinfStatus::Io);
}
