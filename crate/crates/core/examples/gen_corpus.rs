//! Regenerates the bundled model corpus from the fixture constructors.

use divstab_core::fixtures;
use divstab_core::io::to_model_file;
use divstab_core::numclass::VarietyModel;
use divstab_core::rat::rat;

fn write(name: &str, model: &VarietyModel) {
    let file = to_model_file(model);
    let text = serde_json::to_string_pretty(&file).unwrap();
    std::fs::write(format!("models/{name}.json"), text + "\n").unwrap();
    println!("wrote models/{name}.json");
}

fn main() {
    std::fs::create_dir_all("models").unwrap();
    write("p1", &fixtures::p1_curve(4, &[("p", rat(0, 1)), ("q", rat(0, 1))]));
    write("p1_deg1", &fixtures::p1_curve(1, &[("p", rat(0, 1))]));
    write(
        "p1_boundary",
        &fixtures::p1_curve(2, &[("p", rat(1, 2)), ("q", rat(-1, 3))]),
    );
    write("genus2", &fixtures::genus2_curve());
    write("p2", &fixtures::p2_surface());
    write("p2_chains", &fixtures::p2_with_chains());
    write("p2_toric", &fixtures::p2_toric());
    write("p1_toric", &fixtures::p1_toric(4));
    write("f1", &fixtures::f1_blowup_surface());
    for a in 0..=2 {
        write(&format!("f{a}_hirzebruch"), &fixtures::hirzebruch_surface(a));
        write(&format!("f{a}_toric"), &fixtures::hirzebruch_toric(a));
    }
}
