//! Configs compiled into the binary, addressable by name.

pub const ALL: &[(&str, &str)] = &[
    ("fig2", include_str!("../configs/fig2.json")),
    ("figS1", include_str!("../configs/figS1.json")),
    ("fig3", include_str!("../configs/fig3.json")),
    ("fig4", include_str!("../configs/fig4.json")),
    ("fig4c", include_str!("../configs/fig4c.json")),
    ("figS2", include_str!("../configs/figS2.json")),
    ("oscillator", include_str!("../configs/oscillator.json")),
    ("oracle_rabi", include_str!("../configs/oracle_rabi.json")),
    (
        "oracle_hopfield",
        include_str!("../configs/oracle_hopfield.json"),
    ),
];

pub fn find(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
