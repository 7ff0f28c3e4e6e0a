use super::{parse_sequence_file, PulseSequence};
use crate::error::{Error, Result};

/// Interval stored in the bundled files (5 µs).
pub const LIBRARY_TAU: f64 = 5e-6;

const FILES: [(&str, &str); 9] = [
    ("WAHUHA", include_str!("../../data/sequences/v1/WAHUHA.seq")),
    ("SolidEcho", include_str!("../../data/sequences/v1/SolidEcho.seq")),
    ("Ideal6", include_str!("../../data/sequences/v1/Ideal6.seq")),
    ("Offset48", include_str!("../../data/sequences/v1/Offset48.seq")),
    ("Angle12", include_str!("../../data/sequences/v1/Angle12.seq")),
    ("PW12", include_str!("../../data/sequences/v1/PW12.seq")),
    ("yxx48", include_str!("../../data/sequences/v1/yxx48.seq")),
    ("yxx24", include_str!("../../data/sequences/v1/yxx24.seq")),
    ("Cory48", include_str!("../../data/sequences/v1/Cory48.seq")),
];

pub fn library_names() -> Vec<&'static str> {
    FILES.iter().map(|(n, _)| *n).collect()
}

/// A bundled sequence by name, at `tau` = [`LIBRARY_TAU`].
pub fn sequence_library(name: &str) -> Result<PulseSequence> {
    let (_, text) = FILES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownSequence(name.to_string()))?;
    parse_sequence_file(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::Action;

    #[test]
    fn every_entry_parses_with_its_name() {
        for name in library_names() {
            let s = sequence_library(name).unwrap();
            assert_eq!(s.name(), Some(name));
            assert_eq!(s.tau(), LIBRARY_TAU);
        }
        assert!(matches!(sequence_library("MREV8"), Err(Error::UnknownSequence(_))));
    }

    #[test]
    fn lengths_and_delays() {
        let ideal6 = sequence_library("Ideal6").unwrap();
        assert_eq!((ideal6.len(), ideal6.delay_count()), (6, 0));
        let cory = sequence_library("Cory48").unwrap();
        assert_eq!((cory.len(), cory.pulse_count(), cory.delay_count()), (72, 48, 24));
        assert_eq!(sequence_library("WAHUHA").unwrap().actions()[0], Action::Delay);
        for (name, len) in [("Offset48", 48), ("Angle12", 12), ("PW12", 12), ("yxx48", 48), ("yxx24", 24)] {
            let s = sequence_library(name).unwrap();
            assert_eq!(s.len(), len, "{name}");
            assert_eq!(s.len() % 6, 0);
            assert_eq!(s.delay_count(), 0);
        }
    }
}
