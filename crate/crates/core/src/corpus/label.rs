//! The 19 directed relation labels of SemEval-2010 Task 8.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

pub const NUM_LABELS: usize = 19;
pub const NUM_FAMILIES: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    CauseEffect,
    ComponentWhole,
    ContentContainer,
    EntityDestination,
    EntityOrigin,
    InstrumentAgency,
    MemberCollection,
    MessageTopic,
    ProductProducer,
}

impl Family {
    pub const ALL: [Family; NUM_FAMILIES] = [
        Family::CauseEffect,
        Family::ComponentWhole,
        Family::ContentContainer,
        Family::EntityDestination,
        Family::EntityOrigin,
        Family::InstrumentAgency,
        Family::MemberCollection,
        Family::MessageTopic,
        Family::ProductProducer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::CauseEffect => "Cause-Effect",
            Family::ComponentWhole => "Component-Whole",
            Family::ContentContainer => "Content-Container",
            Family::EntityDestination => "Entity-Destination",
            Family::EntityOrigin => "Entity-Origin",
            Family::InstrumentAgency => "Instrument-Agency",
            Family::MemberCollection => "Member-Collection",
            Family::MessageTopic => "Message-Topic",
            Family::ProductProducer => "Product-Producer",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// `(e1,e2)`
    Forward,
    /// `(e2,e1)`
    Backward,
}

/// A relation family with direction, or `Other`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationLabel {
    Other,
    Relation(Family, Direction),
}

impl RelationLabel {
    /// Dense class index: `Other` is 0, then each family's forward and
    /// backward labels in turn.
    pub fn index(self) -> usize {
        match self {
            RelationLabel::Other => 0,
            RelationLabel::Relation(f, Direction::Forward) => 1 + 2 * f.index(),
            RelationLabel::Relation(f, Direction::Backward) => 2 + 2 * f.index(),
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(RelationLabel::Other),
            i if i < NUM_LABELS => {
                let family = Family::ALL[(i - 1) / 2];
                let dir = if (i - 1) % 2 == 0 {
                    Direction::Forward
                } else {
                    Direction::Backward
                };
                Some(RelationLabel::Relation(family, dir))
            }
            _ => None,
        }
    }

    pub fn family(self) -> Option<Family> {
        match self {
            RelationLabel::Other => None,
            RelationLabel::Relation(f, _) => Some(f),
        }
    }

    pub fn all() -> impl Iterator<Item = RelationLabel> {
        (0..NUM_LABELS).map(|i| RelationLabel::from_index(i).unwrap())
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RelationLabel::Other => f.write_str("Other"),
            RelationLabel::Relation(fam, Direction::Forward) => write!(f, "{}(e1,e2)", fam.name()),
            RelationLabel::Relation(fam, Direction::Backward) => write!(f, "{}(e2,e1)", fam.name()),
        }
    }
}

impl FromStr for RelationLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "Other" {
            return Ok(RelationLabel::Other);
        }
        let unknown = || Error::UnknownLabel(s.to_string());
        let (name, args) = s.split_once('(').ok_or_else(unknown)?;
        let family = Family::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(unknown)?;
        let dir = match args.to_ascii_lowercase().replace(' ', "").as_str() {
            "e1,e2)" => Direction::Forward,
            "e2,e1)" => Direction::Backward,
            _ => return Err(unknown()),
        };
        Ok(RelationLabel::Relation(family, dir))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codec_round_trips_all_labels() {
        let labels: Vec<_> = RelationLabel::all().collect();
        assert_eq!(labels.len(), NUM_LABELS);
        for (i, l) in labels.iter().enumerate() {
            assert_eq!(l.index(), i);
            assert_eq!(l.to_string().parse::<RelationLabel>().unwrap(), *l);
        }
    }

    #[test]
    fn parses_official_spelling() {
        let l: RelationLabel = "Cause-Effect(e2,e1)".parse().unwrap();
        assert_eq!(
            l,
            RelationLabel::Relation(Family::CauseEffect, Direction::Backward)
        );
        let l: RelationLabel = "Cause-Effect(E1,E2)".parse().unwrap();
        assert_eq!(
            l,
            RelationLabel::Relation(Family::CauseEffect, Direction::Forward)
        );
    }

    #[test]
    fn other_has_no_family() {
        assert_eq!(RelationLabel::Other.family(), None);
        assert!("Other(e1,e2)".parse::<RelationLabel>().is_err());
        assert!("Cause-Cause(e1,e2)".parse::<RelationLabel>().is_err());
    }
}
