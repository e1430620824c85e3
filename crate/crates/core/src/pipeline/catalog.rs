//! Built-in fact-lookup domains for the synthetic backend. Every entity and
//! value is fictional and generated from the seed, so answers are unique
//! within a bundle.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Literal, ParameterSpec, ToolDocument, ValueKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    City,
    Country,
    Person,
    Organization,
    Landmark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Output {
    Entity(EntityKind),
    Value,
}

const STEMS: &[&str] = &[
    "vel", "cor", "dra", "mar", "tal", "ost", "bren", "kai", "lum", "ner", "sab", "tor", "ul",
    "ves", "zan", "hal", "quen", "ril", "fen", "gor", "ash", "bel", "cad", "dun", "eld", "thar",
];
const LINKS: &[&str] = &["", "a", "o", "e", "i", "ar", "en", "iv"];
const CITY_ENDS: &[&str] = &[
    "mora", "rinth", "ford", "haven", "burg", "dale", "port", "mont", "stead", "gard", "lisk", "wyn",
];
const COUNTRY_ENDS: &[&str] = &["nia", "land", "stan", "ria", "vania", "dor", "mark"];
const FIRST_NAMES: &[&str] = &[
    "Arin", "Belka", "Cassio", "Dara", "Emeric", "Fenna", "Galen", "Hesta", "Ilan", "Jorun",
    "Kesia", "Lorcan", "Maren", "Nilo", "Oriel", "Petra", "Quill", "Rosalind", "Soren", "Talia",
    "Ulric", "Vesna", "Wren", "Yara", "Zoltan",
];
const SURNAME_ENDS: &[&str] = &["sel", "wick", "mont", "holt", "ley", "rin", "vane", "croft", "by"];
const ORG_ENDS: &[&str] = &["vex", "tronic", "gen", "corp", "ly", "sys", "on"];
const ORG_KINDS: &[&str] = &[
    "Labs", "Systems", "Holdings", "Works", "Industries", "Group", "Dynamics", "Foundry",
];
const LANDMARK_FORMS: &[(&str, &str)] = &[
    ("Mount ", ""),
    ("Lake ", ""),
    ("", " Tower"),
    ("", " Bridge"),
    ("", " Observatory"),
    ("", " Falls"),
    ("", " Gate"),
];
const CURRENCY_UNITS: &[&str] = &["crown", "mark", "florin", "dinar", "thaler", "sol"];
const FOREST_FORMS: &[&str] = &[" Forest", " Woods", " Wildwood"];
const MONTHS: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September",
    "October", "November", "December",
];
const MODES: &[&str] = &["walking", "biking", "driving", "public_transport"];
const LENGTH_UNITS: &[(&str, f64)] = &[
    ("meters", 1.0),
    ("kilometers", 1000.0),
    ("miles", 1609.344),
    ("feet", 0.3048),
    ("yards", 0.9144),
];

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &'a [&'a str]) -> &'a str {
    items.choose(rng).copied().expect("non-empty word list")
}

fn stem(rng: &mut ChaCha8Rng) -> String {
    format!("{}{}", pick(rng, STEMS), pick(rng, LINKS))
}

/// Draws fresh names and values, never repeating a string within one
/// bundle.
pub struct NameGen {
    used: BTreeSet<String>,
}

impl NameGen {
    pub fn new() -> Self {
        NameGen {
            used: BTreeSet::new(),
        }
    }

    /// Reserves `candidate` unless it overlaps a string already drawn.
    pub fn try_reserve(&mut self, candidate: &str) -> bool {
        let clash = self
            .used
            .iter()
            .any(|u| u.contains(candidate) || candidate.contains(u.as_str()));
        if !clash {
            self.used.insert(candidate.to_string());
        }
        !clash
    }

    fn fresh(&mut self, rng: &mut ChaCha8Rng, mut make: impl FnMut(&mut ChaCha8Rng) -> String) -> String {
        loop {
            let candidate = make(rng);
            if self.try_reserve(&candidate) {
                return candidate;
            }
        }
    }

    pub fn entity(&mut self, rng: &mut ChaCha8Rng, kind: EntityKind) -> String {
        self.fresh(rng, |rng| match kind {
            EntityKind::City => capitalize(&format!("{}{}", stem(rng), pick(rng, CITY_ENDS))),
            EntityKind::Country => capitalize(&format!("{}{}", stem(rng), pick(rng, COUNTRY_ENDS))),
            EntityKind::Person => format!(
                "{} {}",
                pick(rng, FIRST_NAMES),
                capitalize(&format!("{}{}", pick(rng, STEMS), pick(rng, SURNAME_ENDS)))
            ),
            EntityKind::Organization => format!(
                "{} {}",
                capitalize(&format!("{}{}", stem(rng), pick(rng, ORG_ENDS))),
                pick(rng, ORG_KINDS)
            ),
            EntityKind::Landmark => {
                let (pre, post) = *LANDMARK_FORMS.choose(rng).expect("non-empty");
                format!("{pre}{}{post}", capitalize(&stem(rng)))
            }
        })
    }

    pub fn value(&mut self, rng: &mut ChaCha8Rng, make: impl FnMut(&mut ChaCha8Rng) -> String) -> String {
        self.fresh(rng, make)
    }
}

impl Default for NameGen {
    fn default() -> Self {
        Self::new()
    }
}

fn with_commas(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

/// One fact-lookup domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    LandmarkCity,
    CityCountry,
    CountryCapital,
    CityMayor,
    PersonBirthplace,
    PersonEmployer,
    OrgFounder,
    OrgHeadquarters,
    CityPopulation,
    CountryCurrency,
    OrgFoundingDate,
    OrgRegistry,
    LandmarkForest,
    Distance,
    UnitConversion,
}

/// What a hop consumes.
#[derive(Debug, Clone)]
pub enum HopInput {
    /// A fresh literal entity named in the question.
    Literal(String),
    /// The answer of an earlier sub-question: its id, the answer itself and
    /// the noun phrase that describes it.
    Prior { id: String, answer: String, phrase: String },
    /// Relations whose inputs are all generated internally.
    Source,
}

/// A generated sub-question before it is bound to an id.
#[derive(Debug, Clone)]
pub struct Hop {
    pub text: String,
    pub phrase: String,
    pub answer: String,
    pub bindings: Vec<(String, Literal)>,
    pub document: ToolDocument,
}

impl Relation {
    pub const ALL: [Relation; 15] = [
        Relation::LandmarkCity,
        Relation::CityCountry,
        Relation::CountryCapital,
        Relation::CityMayor,
        Relation::PersonBirthplace,
        Relation::PersonEmployer,
        Relation::OrgFounder,
        Relation::OrgHeadquarters,
        Relation::CityPopulation,
        Relation::CountryCurrency,
        Relation::OrgFoundingDate,
        Relation::OrgRegistry,
        Relation::LandmarkForest,
        Relation::Distance,
        Relation::UnitConversion,
    ];

    /// Template id accepted by [`crate::pipeline::ScenarioSeed::template`].
    pub fn id(self) -> &'static str {
        match self {
            Relation::LandmarkCity => "landmark_city",
            Relation::CityCountry => "city_country",
            Relation::CountryCapital => "country_capital",
            Relation::CityMayor => "city_mayor",
            Relation::PersonBirthplace => "person_birthplace",
            Relation::PersonEmployer => "person_employer",
            Relation::OrgFounder => "org_founder",
            Relation::OrgHeadquarters => "org_headquarters",
            Relation::CityPopulation => "city_population",
            Relation::CountryCurrency => "country_currency",
            Relation::OrgFoundingDate => "org_founding_date",
            Relation::OrgRegistry => "org_registry",
            Relation::LandmarkForest => "landmark_forest",
            Relation::Distance => "distance",
            Relation::UnitConversion => "unit_conversion",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Relation::ALL.into_iter().find(|r| r.id() == id)
    }

    pub fn input(self) -> Option<EntityKind> {
        use EntityKind::*;
        Some(match self {
            Relation::LandmarkCity | Relation::LandmarkForest => Landmark,
            Relation::CityCountry | Relation::CityMayor | Relation::CityPopulation => City,
            Relation::CountryCapital | Relation::CountryCurrency => Country,
            Relation::PersonBirthplace | Relation::PersonEmployer => Person,
            Relation::OrgFounder
            | Relation::OrgHeadquarters
            | Relation::OrgFoundingDate
            | Relation::OrgRegistry => Organization,
            Relation::Distance | Relation::UnitConversion => return None,
        })
    }

    pub fn output(self) -> Output {
        use EntityKind::*;
        match self {
            Relation::LandmarkCity | Relation::CountryCapital | Relation::PersonBirthplace => Output::Entity(City),
            Relation::OrgHeadquarters => Output::Entity(City),
            Relation::CityCountry => Output::Entity(Country),
            Relation::CityMayor | Relation::OrgFounder => Output::Entity(Person),
            Relation::PersonEmployer => Output::Entity(Organization),
            _ => Output::Value,
        }
    }

    /// Relations that can appear after a hop producing `kind`.
    pub fn consuming(kind: EntityKind) -> impl Iterator<Item = Relation> {
        Relation::ALL.into_iter().filter(move |r| r.input() == Some(kind))
    }

    pub fn tool_name(self) -> &'static str {
        match self {
            Relation::LandmarkCity => "landmark_locator",
            Relation::CityCountry => "country_of_city",
            Relation::CountryCapital => "capital_finder",
            Relation::CityMayor => "mayor_registry",
            Relation::PersonBirthplace => "birthplace_finder",
            Relation::PersonEmployer => "employment_lookup",
            Relation::OrgFounder => "company_founder_lookup",
            Relation::OrgHeadquarters => "headquarters_locator",
            Relation::CityPopulation => "population_statistics",
            Relation::CountryCurrency => "currency_lookup",
            Relation::OrgFoundingDate => "founding_date_lookup",
            Relation::OrgRegistry => "business_registry_lookup",
            Relation::LandmarkForest => "nearby_forest_locator",
            Relation::Distance => "distance_calculator",
            Relation::UnitConversion => "unit_converter",
        }
    }

    fn description(self) -> &'static str {
        match self {
            Relation::LandmarkCity => "Finds the municipality in which a named monument, attraction or natural site is situated.",
            Relation::CityCountry => "Returns the sovereign nation to which a given settlement belongs.",
            Relation::CountryCapital => "Looks up the seat of government for a nation.",
            Relation::CityMayor => "Retrieves who held mayoral office in a town during a specific year.",
            Relation::PersonBirthplace => "Identifies the hometown where an individual was born.",
            Relation::PersonEmployer => "Reports the current employer organization of a specified professional.",
            Relation::OrgFounder => "Provides the founding entrepreneur behind a business or institution.",
            Relation::OrgHeadquarters => "Determines where a corporation keeps its head office.",
            Relation::CityPopulation => "Gives census resident counts for settlements.",
            Relation::CountryCurrency => "Names the official money used as legal tender in a state.",
            Relation::OrgFoundingDate => "Returns the establishment date of an enterprise or society.",
            Relation::OrgRegistry => "Fetches official registration identifiers from the commercial register.",
            Relation::LandmarkForest => "Identifies forests or wooded areas near a specific geographic landmark, including remote regions.",
            Relation::Distance => "A versatile tool to calculate distances between two locations for various modes of transportation (e.g., walking, biking, driving).",
            Relation::UnitConversion => "Converts a numeric length quantity from one measurement unit into another.",
        }
    }

    fn input_param(self) -> Option<(&'static str, &'static str)> {
        Some(match self.input()? {
            EntityKind::Landmark => ("landmark", "Name of the landmark."),
            EntityKind::City => ("city", "Name of the city."),
            EntityKind::Country => ("country", "Name of the country."),
            EntityKind::Person => ("person_name", "Full name of the person."),
            EntityKind::Organization => ("organization", "Registered name of the organization."),
        })
    }

    fn question(self) -> &'static str {
        match self {
            Relation::LandmarkCity => "In which city is {x} located?",
            Relation::CityCountry => "Which country is {x} in?",
            Relation::CountryCapital => "What is the capital of {x}?",
            Relation::CityMayor => "Who was the mayor of {x} in {year}?",
            Relation::PersonBirthplace => "Where was {x} born?",
            Relation::PersonEmployer => "Which organization does {x} work for?",
            Relation::OrgFounder => "Who founded {x}?",
            Relation::OrgHeadquarters => "In which city is {x} headquartered?",
            Relation::CityPopulation => "What is the population of {x}?",
            Relation::CountryCurrency => "What currency is used in {x}?",
            Relation::OrgFoundingDate => "When was {x} founded?",
            Relation::OrgRegistry => "What is the registration number of {x}?",
            Relation::LandmarkForest => "Which forest is near {x}?",
            Relation::Distance => "What is the {mode} distance (km) from {a} to {b}?",
            Relation::UnitConversion => "How many {to} are in {value} {from}?",
        }
    }

    fn phrase(self) -> &'static str {
        match self {
            Relation::LandmarkCity => "the city where {x} is located",
            Relation::CityCountry => "the country that contains {x}",
            Relation::CountryCapital => "the capital of {x}",
            Relation::CityMayor => "the mayor of {x} in {year}",
            Relation::PersonBirthplace => "the birthplace of {x}",
            Relation::PersonEmployer => "the employer of {x}",
            Relation::OrgFounder => "the founder of {x}",
            Relation::OrgHeadquarters => "the headquarters city of {x}",
            Relation::CityPopulation => "the population of {x}",
            Relation::CountryCurrency => "the currency of {x}",
            Relation::OrgFoundingDate => "the founding date of {x}",
            Relation::OrgRegistry => "the registration number of {x}",
            Relation::LandmarkForest => "the forest near {x}",
            Relation::Distance => "the {mode} distance from {a} to {b}",
            Relation::UnitConversion => "{value} {from} in {to}",
        }
    }

    /// Optional parameters a generated document may carry in addition to
    /// the base interface.
    fn optional_pool(self) -> Vec<ParameterSpec> {
        match self.input() {
            Some(EntityKind::City) => vec![
                ParameterSpec::new("country_hint", ValueKind::String, "Country used to disambiguate identically named cities."),
            ],
            Some(EntityKind::Person) => vec![
                ParameterSpec::new("include_aliases", ValueKind::Boolean, "Also match known aliases of the person. Default is false.").with_default(false),
            ],
            Some(EntityKind::Organization) => vec![
                ParameterSpec::new("include_subsidiaries", ValueKind::Boolean, "Include subsidiaries in the search. Default is false.").with_default(false),
            ],
            Some(EntityKind::Country) => vec![
                ParameterSpec::new("historical", ValueKind::Boolean, "Return historical rather than current records. Default is false.").with_default(false),
            ],
            Some(EntityKind::Landmark) => vec![
                ParameterSpec::new("region", ValueKind::String, "Region used to narrow the search."),
            ],
            None => Vec::new(),
        }
    }

    /// The base tool interface plus a seeded subset of the optional pool.
    pub fn document(self, rng: &mut ChaCha8Rng) -> ToolDocument {
        let mut doc = ToolDocument::new(self.tool_name(), self.description());
        if let Some((name, desc)) = self.input_param() {
            doc = doc.param(ParameterSpec::new(name, ValueKind::String, desc).required());
        }
        match self {
            Relation::CityMayor => {
                doc = doc.param(ParameterSpec::new("year", ValueKind::Integer, "Calendar year of the term.").required());
            }
            Relation::LandmarkForest => {
                doc = doc
                    .param(
                        ParameterSpec::new("radius", ValueKind::Number, "The search radius (in kilometers). Default is 50 km.")
                            .with_default(50),
                    )
                    .param(
                        ParameterSpec::new("include_protected", ValueKind::Boolean, "Whether to include protected areas. Default is false.")
                            .with_default(false),
                    );
            }
            Relation::Distance => {
                doc = doc
                    .param(ParameterSpec::new("origin", ValueKind::String, "Starting point address or coordinates for the distance calculation.").required())
                    .param(ParameterSpec::new("destination", ValueKind::String, "Ending point address or coordinates for the distance calculation.").required())
                    .param(
                        ParameterSpec::new("mode", ValueKind::String, "Mode of transportation to calculate the distance for.")
                            .with_enum(MODES.iter().copied())
                            .required(),
                    )
                    .param(
                        ParameterSpec::new("unit", ValueKind::String, "Unit of distance to return. Default is 'km'.")
                            .with_enum(["km", "miles", "meters"])
                            .with_default("km"),
                    );
            }
            Relation::UnitConversion => {
                let units: Vec<&str> = LENGTH_UNITS.iter().map(|(u, _)| *u).collect();
                doc = doc
                    .param(ParameterSpec::new("value", ValueKind::Number, "Quantity to convert.").required())
                    .param(ParameterSpec::new("from_unit", ValueKind::String, "Unit of the given quantity.").with_enum(units.clone()).required())
                    .param(ParameterSpec::new("to_unit", ValueKind::String, "Unit to convert into.").with_enum(units).required())
                    .param(ParameterSpec::new("precision", ValueKind::Integer, "Decimal places in the result. Default is 2.").with_default(2));
            }
            _ => {}
        }
        for extra in self.optional_pool() {
            if rng.random_bool(0.5) {
                doc = doc.param(extra);
            }
        }
        doc
    }

    /// Generates one hop. `input` must be `Source` exactly when the
    /// relation has no entity input.
    pub fn hop(self, rng: &mut ChaCha8Rng, names: &mut NameGen, input: HopInput) -> Hop {
        let document = self.document(rng);
        let mut text = self.question().to_string();
        let mut phrase = self.phrase().to_string();
        let mut bindings = Vec::new();

        if let Some((param, _)) = self.input_param() {
            let (shown, literal) = match &input {
                HopInput::Literal(name) => (name.clone(), Literal::string(name.clone())),
                HopInput::Prior { id, phrase, .. } => (phrase.clone(), Literal::reference(id.clone())),
                HopInput::Source => {
                    let kind = self.input().expect("entity relation");
                    let name = names.entity(rng, kind);
                    (name.clone(), Literal::string(name))
                }
            };
            text = text.replace("{x}", &shown);
            phrase = phrase.replace("{x}", &shown);
            bindings.push((param.to_string(), literal));
        }

        let answer = match self {
            Relation::CityMayor => {
                let year: i64 = rng.random_range(1960..=2020);
                text = text.replace("{year}", &year.to_string());
                phrase = phrase.replace("{year}", &year.to_string());
                bindings.push(("year".into(), Literal::integer(year)));
                names.entity(rng, EntityKind::Person)
            }
            Relation::Distance => {
                let a = names.entity(rng, EntityKind::Landmark);
                let b = names.entity(rng, EntityKind::Landmark);
                let mode = pick(rng, MODES);
                for (key, val) in [("{a}", &a), ("{b}", &b)] {
                    text = text.replace(key, val);
                    phrase = phrase.replace(key, val);
                }
                let shown_mode = mode.replace('_', " ");
                text = text.replace("{mode}", &shown_mode);
                phrase = phrase.replace("{mode}", &shown_mode);
                bindings.push(("origin".into(), Literal::string(a)));
                bindings.push(("destination".into(), Literal::string(b)));
                bindings.push(("mode".into(), Literal::string(mode)));
                names.value(rng, |rng| format!("{:.1} km", rng.random_range(5..400) as f64 / 10.0))
            }
            Relation::UnitConversion => {
                let (from, to, value, answer) = loop {
                    let (from, from_m) = *LENGTH_UNITS.choose(rng).expect("units");
                    let (to, to_m) = *LENGTH_UNITS.choose(rng).expect("units");
                    if from == to {
                        continue;
                    }
                    let value = f64::from(rng.random_range(5u32..500)) / 2.0;
                    let answer = format!("{:.2} {to}", value * from_m / to_m);
                    if names.try_reserve(&answer) {
                        break (from, to, value, answer);
                    }
                };
                for (key, val) in [("{to}", to.to_string()), ("{from}", from.to_string()), ("{value}", value.to_string())] {
                    text = text.replace(key, &val);
                    phrase = phrase.replace(key, &val);
                }
                bindings.push(("value".into(), Literal::float(value).expect("finite")));
                bindings.push(("from_unit".into(), Literal::string(from)));
                bindings.push(("to_unit".into(), Literal::string(to)));
                answer
            }
            _ => match self.output() {
                Output::Entity(kind) => names.entity(rng, kind),
                Output::Value => self.value(rng, names),
            },
        };

        Hop {
            text,
            phrase,
            answer,
            bindings,
            document,
        }
    }

    fn value(self, rng: &mut ChaCha8Rng, names: &mut NameGen) -> String {
        names.value(rng, |rng| match self {
            Relation::CityPopulation => with_commas(rng.random_range(12_000u64..4_800_000)),
            Relation::CountryCurrency => format!("{} {}", capitalize(&stem(rng)), pick(rng, CURRENCY_UNITS)),
            Relation::OrgFoundingDate => format!(
                "{} {} {}",
                rng.random_range(1..=28),
                pick(rng, MONTHS),
                rng.random_range(1850..=2015)
            ),
            Relation::OrgRegistry => format!("REG-{:05}", rng.random_range(0..100_000)),
            Relation::LandmarkForest => format!("{}{}", capitalize(&stem(rng)), pick(rng, FOREST_FORMS)),
            other => unreachable!("{other:?} produces an entity"),
        })
    }
}
