//! Built-in strip definitions compiled into the binary.

/// Name, one-line description and definition text.
pub const CATALOG: &[(&str, &str, &str)] = &[
    (
        "example-1",
        "Frenet-combination Möbius strip on a curve without inflections",
        include_str!("examples/example-1.strip"),
    ),
    (
        "example-2",
        "rectifying Möbius strip on a two-chart curve with one inflection",
        include_str!("examples/example-2.strip"),
    ),
];

pub fn source(name: &str) -> Option<&'static str> {
    CATALOG.iter().find(|(n, _, _)| *n == name).map(|(_, _, t)| *t)
}
