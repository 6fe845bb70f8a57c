//! One line per acceptance criterion. Criteria listed in `RECORDED_FINDINGS`
//! fail at desk-scale ε (see the README); they are
//! still run at their stated tolerances and reported as FAIL. Any other
//! failure fails the target.

use acg_core::criteria::{run, ALL};

const RECORDED_FINDINGS: [u8; 3] = [8, 9, 10];

fn main() {
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for id in ALL {
        let o = run(id);
        println!("{}", o.line());
        if o.pass {
            passed += 1;
        } else if !RECORDED_FINDINGS.contains(&id) {
            unexpected.push(id);
        }
    }
    println!("acceptance: {passed}/{} criteria pass", ALL.len());
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
