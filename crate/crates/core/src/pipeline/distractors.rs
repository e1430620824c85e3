//! Non-essential tools added by toolset extension.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use super::PipelineError;
use crate::model::{ParameterSpec, ToolDocument, ValueKind};

#[derive(Debug, Clone, PartialEq)]
pub struct DistractorCatalog {
    documents: Vec<ToolDocument>,
}

fn s(name: &str, desc: &str) -> ParameterSpec {
    ParameterSpec::new(name, ValueKind::String, desc)
}

impl DistractorCatalog {
    pub fn new(documents: Vec<ToolDocument>) -> Self {
        DistractorCatalog { documents }
    }

    /// Twenty-four tools from neighbouring domains.
    pub fn builtin() -> Self {
        let docs = vec![
            ToolDocument::new("weather_forecast", "Provides a multi-day weather outlook for a location.")
                .param(s("location", "City or coordinates.").required())
                .param(ParameterSpec::new("days", ValueKind::Integer, "Number of forecast days. Default is 3.").with_default(3)),
            ToolDocument::new("stock_quote", "Returns the latest trading price for a listed equity.")
                .param(s("ticker", "Exchange ticker symbol.").required()),
            ToolDocument::new("translate_text", "Translates a passage between natural languages.")
                .param(s("text", "Source text.").required())
                .param(s("target_language", "ISO language code.").required()),
            ToolDocument::new("flight_status", "Tracks departure and arrival status of a scheduled flight.")
                .param(s("flight_number", "Carrier code and number.").required())
                .param(s("date", "Departure date (YYYY-MM-DD).")),
            ToolDocument::new("hotel_availability", "Lists vacant rooms at lodgings for given dates.")
                .param(s("city", "Destination city.").required())
                .param(s("check_in", "Arrival date.").required())
                .param(ParameterSpec::new("guests", ValueKind::Integer, "Number of guests. Default is 2.").with_default(2)),
            ToolDocument::new("exchange_rate", "Quotes the conversion rate between two currencies.")
                .param(s("base", "Currency to convert from.").required())
                .param(s("quote", "Currency to convert to.").required()),
            ToolDocument::new("time_zone_lookup", "Gives the UTC offset and local time for a place.")
                .param(s("location", "City or region.").required()),
            ToolDocument::new("news_headlines", "Fetches recent headlines on a topic.")
                .param(s("topic", "Subject keyword.").required())
                .param(ParameterSpec::new("limit", ValueKind::Integer, "Maximum headlines. Default is 5.").with_default(5)),
            ToolDocument::new("movie_showtimes", "Lists cinema screenings of a film near a place.")
                .param(s("title", "Film title.").required())
                .param(s("city", "City to search.")),
            ToolDocument::new("restaurant_finder", "Suggests eateries matching a cuisine near a location.")
                .param(s("location", "Neighbourhood or city.").required())
                .param(s("cuisine", "Cuisine style.")),
            ToolDocument::new("air_quality_index", "Reports pollutant levels and the AQI for a monitoring area.")
                .param(s("city", "City name.").required()),
            ToolDocument::new("sports_scores", "Returns final and live scores for a league.")
                .param(s("league", "League identifier.").required())
                .param(s("team", "Optional team filter.")),
            ToolDocument::new("book_search", "Searches a library catalogue by title or author.")
                .param(s("query", "Title, author or ISBN.").required()),
            ToolDocument::new("dictionary_definition", "Explains the meaning of an English word.")
                .param(s("word", "Headword.").required()),
            ToolDocument::new("public_holiday_calendar", "Lists statutory holidays of a nation for a year.")
                .param(s("country", "Country name.").required())
                .param(ParameterSpec::new("year", ValueKind::Integer, "Calendar year.").required()),
            ToolDocument::new("parking_availability", "Shows free parking spaces near an address.")
                .param(s("address", "Street address.").required()),
            ToolDocument::new("city_area_lookup", "Gives the land surface area of a municipality in square kilometres.")
                .param(s("city", "City name.").required()),
            ToolDocument::new("landmark_opening_hours", "Returns visiting hours and ticket prices for an attraction.")
                .param(s("landmark", "Attraction name.").required()),
            ToolDocument::new("university_ranking", "Reports the international rank of a higher education institution.")
                .param(s("institution", "University name.").required()),
            ToolDocument::new("river_length", "Measures the total course length of a river.")
                .param(s("river", "River name.").required()),
            ToolDocument::new("company_stock_listing", "Tells which exchange lists the shares of a firm.")
                .param(s("organization", "Company name.").required()),
            ToolDocument::new("person_net_worth", "Estimates the personal fortune of a public figure.")
                .param(s("person_name", "Full name.").required()),
            ToolDocument::new("national_anthem_lookup", "Gives the title and composer of a state's anthem.")
                .param(s("country", "Country name.").required()),
            ToolDocument::new("elevation_finder", "Returns height above sea level for a geographic point.")
                .param(s("location", "Place name or coordinates.").required())
                .param(
                    ParameterSpec::new("unit", ValueKind::String, "Unit of the result. Default is 'meters'.")
                        .with_enum(["meters", "feet"])
                        .with_default("meters"),
                ),
        ];
        DistractorCatalog { documents: docs }
    }

    pub fn documents(&self) -> &[ToolDocument] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Draws `k` documents whose names are not in `taken`.
    pub fn pick(
        &self,
        k: usize,
        taken: &BTreeSet<String>,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<ToolDocument>, PipelineError> {
        let mut free: Vec<&ToolDocument> = self.documents.iter().filter(|d| !taken.contains(&d.name)).collect();
        if free.len() < k {
            return Err(PipelineError::CatalogExhausted {
                requested: k,
                available: free.len(),
            });
        }
        free.shuffle(rng);
        Ok(free.into_iter().take(k).cloned().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_document;
    use rand::SeedableRng;

    #[test]
    fn builtin_documents_are_valid_and_distinct() {
        let cat = DistractorCatalog::builtin();
        assert_eq!(cat.len(), 24);
        let names: BTreeSet<_> = cat.documents().iter().map(|d| d.name.clone()).collect();
        assert_eq!(names.len(), cat.len());
        for d in cat.documents() {
            assert!(validate_document(d).is_empty(), "{}", d.name);
        }
    }

    #[test]
    fn exhaustion_is_reported() {
        let cat = DistractorCatalog::builtin();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let taken: BTreeSet<String> = ["stock_quote".to_string()].into();
        assert!(cat.pick(23, &taken, &mut rng).is_ok());
        assert!(matches!(
            cat.pick(24, &taken, &mut rng),
            Err(PipelineError::CatalogExhausted { requested: 24, available: 23 })
        ));
    }
}
