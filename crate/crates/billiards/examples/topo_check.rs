fn main() {
    let report = billiards::suite::run_suite(17, Some("birkhoff"));
    for c in &report.criteria {
        println!("criterion {:2} [{}] {}", c.id, if c.passed { "PASS" } else { "FAIL" }, c.details);
    }
}
