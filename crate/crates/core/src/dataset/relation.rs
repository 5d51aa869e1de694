use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Relationship type of a knowledge triple.
///
/// The sixteen built-in relations have shipped question templates; any other
/// name parses as [`Relation::Custom`] and is usable once a template for it is
/// registered.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Occupation,
    PlaceOfBirth,
    Genre,
    Father,
    Country,
    Producer,
    Director,
    CapitalOf,
    Screenwriter,
    Composer,
    Color,
    Religion,
    Sport,
    Author,
    Mother,
    Capital,
    Custom(String),
}

impl Relation {
    pub const BUILTIN: [Relation; 16] = [
        Relation::Occupation,
        Relation::PlaceOfBirth,
        Relation::Genre,
        Relation::Father,
        Relation::Country,
        Relation::Producer,
        Relation::Director,
        Relation::CapitalOf,
        Relation::Screenwriter,
        Relation::Composer,
        Relation::Color,
        Relation::Religion,
        Relation::Sport,
        Relation::Author,
        Relation::Mother,
        Relation::Capital,
    ];

    pub fn as_str(&self) -> &str {
        match self {
            Relation::Occupation => "occupation",
            Relation::PlaceOfBirth => "place of birth",
            Relation::Genre => "genre",
            Relation::Father => "father",
            Relation::Country => "country",
            Relation::Producer => "producer",
            Relation::Director => "director",
            Relation::CapitalOf => "capital of",
            Relation::Screenwriter => "screenwriter",
            Relation::Composer => "composer",
            Relation::Color => "color",
            Relation::Religion => "religion",
            Relation::Sport => "sport",
            Relation::Author => "author",
            Relation::Mother => "mother",
            Relation::Capital => "capital",
            Relation::Custom(s) => s,
        }
    }

    pub fn is_builtin(&self) -> bool {
        !matches!(self, Relation::Custom(_))
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        Ok(Relation::BUILTIN
            .iter()
            .find(|r| r.as_str() == s)
            .cloned()
            .unwrap_or_else(|| Relation::Custom(s.to_string())))
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(s.parse().unwrap())
    }
}
