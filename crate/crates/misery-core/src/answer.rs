//! Reply parsing: turning free-form model text into typed answers.
//!
//! Parsing is deliberately forgiving about surrounding prose and
//! strict about values:
//!
//! * scalars: the FIRST number inside the allowed range wins, so a
//!   reply that restates the scale ("65 out of 100") yields 65;
//! * ordinal and binary answers: the earliest keyword occurrence wins;
//! * intervals: the first adjacent pair of in-range integers joined by
//!   a separator (`,`, `-`, `–`, `to`, `and`), else a lone pair of
//!   in-range integers anywhere in the reply.
//!
//! Anything else is [`ParsedAnswer::Invalid`] carrying the raw text.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Three-way placement of a target relative to two anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrdinalAnswer {
    Above,
    Below,
    Between,
}

impl core::fmt::Display for OrdinalAnswer {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            OrdinalAnswer::Above => "above",
            OrdinalAnswer::Below => "below",
            OrdinalAnswer::Between => "between",
        })
    }
}

/// Two-way comparison of a target against a base story.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryAnswer {
    Higher,
    Lower,
}

impl core::fmt::Display for BinaryAnswer {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            BinaryAnswer::Higher => "higher",
            BinaryAnswer::Lower => "lower",
        })
    }
}

/// A model reply after parsing. `Invalid` keeps the raw text for the
/// transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParsedAnswer {
    Ordinal(OrdinalAnswer),
    Binary(BinaryAnswer),
    Scalar(f64),
    Interval { lo: i64, hi: i64 },
    Invalid(String),
}

/// A number found in text: its value and byte span.
#[derive(Debug, Clone, Copy, PartialEq)]
struct NumberToken {
    value: f64,
    start: usize,
    end: usize,
}

/// Scans left to right for numbers: optional minus, digits, optional
/// fractional part. A `-` directly after a digit is a separator (so
/// "40-70" yields 40 and 70), otherwise it negates ("it's -5" yields
/// -5). A dot only joins the number when digits follow it.
fn scan_numbers(text: &str) -> Vec<NumberToken> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let negative = bytes[i] == b'-'
            && i + 1 < bytes.len()
            && bytes[i + 1].is_ascii_digit()
            && (i == 0 || !bytes[i - 1].is_ascii_digit());
        let digit_start = if negative { i + 1 } else { i };
        if !bytes.get(digit_start).is_some_and(|b| b.is_ascii_digit()) {
            i += 1;
            continue;
        }
        let start = i;
        let mut j = digit_start;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j + 1 < bytes.len() && bytes[j] == b'.' && bytes[j + 1].is_ascii_digit() {
            j += 1;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
        }
        let value: f64 = text[start..j].parse().expect("scanned digits parse");
        tokens.push(NumberToken {
            value,
            start,
            end: j,
        });
        i = j;
    }
    tokens
}

/// Extracts the first number within `[lo, hi]`, or `None` when the
/// reply contains no in-range number.
pub fn parse_scalar(reply: &str, lo: f64, hi: f64) -> Option<f64> {
    scan_numbers(reply)
        .into_iter()
        .map(|t| t.value)
        .find(|v| (lo..=hi).contains(v))
}

/// Finds the earliest occurrence of `above`, `below` or `between`
/// (case-insensitive).
pub fn parse_ordinal(reply: &str) -> Option<OrdinalAnswer> {
    earliest_keyword(
        reply,
        &[
            ("above", OrdinalAnswer::Above),
            ("below", OrdinalAnswer::Below),
            ("between", OrdinalAnswer::Between),
        ],
    )
}

/// Finds the earliest occurrence of `higher` or `lower`
/// (case-insensitive).
pub fn parse_binary(reply: &str) -> Option<BinaryAnswer> {
    earliest_keyword(
        reply,
        &[
            ("higher", BinaryAnswer::Higher),
            ("lower", BinaryAnswer::Lower),
        ],
    )
}

fn earliest_keyword<T: Copy>(reply: &str, keywords: &[(&str, T)]) -> Option<T> {
    let lower = reply.to_lowercase();
    keywords
        .iter()
        .filter_map(|&(kw, val)| lower.find(kw).map(|idx| (idx, val)))
        .min_by_key(|&(idx, _)| idx)
        .map(|(_, val)| val)
}

/// Extracts an integer interval with both ends in `[0, 100]` and
/// `lo <= hi`. Numbers with fractional parts never qualify. Prefers
/// the first separator-joined pair; falls back to a reply containing
/// exactly two qualifying integers in order.
pub fn parse_interval(reply: &str) -> Option<(i64, i64)> {
    let tokens = scan_numbers(reply);
    let qualifies =
        |t: &NumberToken| t.value == libm::trunc(t.value) && (0.0..=100.0).contains(&t.value);

    for pair in tokens.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if qualifies(&a) && qualifies(&b) && a.value <= b.value {
            let between = reply[a.end..b.start].trim();
            let is_separator = matches!(between, "," | "-" | "–" | "—")
                || between.eq_ignore_ascii_case("to")
                || between.eq_ignore_ascii_case("and");
            if is_separator {
                return Some((a.value as i64, b.value as i64));
            }
        }
    }

    let in_range: Vec<&NumberToken> = tokens.iter().filter(|t| qualifies(t)).collect();
    if let [a, b] = in_range[..] {
        if a.value <= b.value {
            return Some((a.value as i64, b.value as i64));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn scalar_plain_number() {
        assert_eq!(parse_scalar("I'd say 72.", 1.0, 100.0), Some(72.0));
    }

    #[test]
    fn scalar_takes_first_in_range_not_scale_bound() {
        assert_eq!(parse_scalar("Misery score: 65/100", 1.0, 100.0), Some(65.0));
    }

    #[test]
    fn scalar_skips_out_of_range_prefix() {
        assert_eq!(
            parse_scalar("-5 feels wrong, call it 60", 1.0, 100.0),
            Some(60.0)
        );
        assert_eq!(parse_scalar("out of 1000? no: 45", 1.0, 100.0), Some(45.0));
    }

    #[test]
    fn scalar_decimal_and_bounds() {
        assert_eq!(parse_scalar("roughly 33.5 overall", 1.0, 100.0), Some(33.5));
        assert_eq!(parse_scalar("1", 1.0, 100.0), Some(1.0));
        assert_eq!(parse_scalar("100", 1.0, 100.0), Some(100.0));
        assert_eq!(parse_scalar("0", 1.0, 100.0), None);
        assert_eq!(parse_scalar("0", 0.0, 100.0), Some(0.0));
    }

    #[test]
    fn scalar_no_number_is_invalid() {
        assert_eq!(parse_scalar("no idea", 1.0, 100.0), None);
        assert_eq!(parse_scalar("", 1.0, 100.0), None);
    }

    #[test]
    fn scalar_reply_corpus() {
        // Hand-labeled replies fixed before the scanner was written.
        let corpus: &[(&str, Option<f64>)] = &[
            ("72", Some(72.0)),
            ("Score: 72", Some(72.0)),
            ("I would rate this a 85 out of 100.", Some(85.0)),
            ("Maybe 40? Or 50.", Some(40.0)),
            ("between 30 and 40, say 35", Some(30.0)),
            ("It deserves a solid 99.9", Some(99.9)),
            ("7/10 would not repeat", Some(7.0)),
            ("a million out of 100", Some(100.0)),
            ("nothing numeric here", None),
            ("-42 is my answer", None),
            ("I'd give it 55!", Some(55.0)),
            ("misery=60", Some(60.0)),
        ];
        for (reply, want) in corpus {
            assert_eq!(parse_scalar(reply, 1.0, 100.0), *want, "reply {reply:?}");
        }
    }

    #[test]
    fn ordinal_keywords() {
        assert_eq!(parse_ordinal("Above."), Some(OrdinalAnswer::Above));
        assert_eq!(
            parse_ordinal("it falls BELOW both"),
            Some(OrdinalAnswer::Below)
        );
        assert_eq!(
            parse_ordinal("I'd place it between the two"),
            Some(OrdinalAnswer::Between)
        );
        assert_eq!(parse_ordinal("roughly 60"), None);
    }

    #[test]
    fn ordinal_earliest_occurrence_wins() {
        assert_eq!(
            parse_ordinal("below, definitely not above"),
            Some(OrdinalAnswer::Below)
        );
        assert_eq!(
            parse_ordinal("not above but below"),
            Some(OrdinalAnswer::Above)
        );
    }

    #[test]
    fn binary_keywords() {
        assert_eq!(
            parse_binary("Higher misery for sure"),
            Some(BinaryAnswer::Higher)
        );
        assert_eq!(
            parse_binary("the target is lower"),
            Some(BinaryAnswer::Lower)
        );
        assert_eq!(parse_binary("the same"), None);
    }

    #[test]
    fn interval_bracketed_pair() {
        assert_eq!(parse_interval("[41, 71]"), Some((41, 71)));
        assert_eq!(parse_interval("(50, 60)."), Some((50, 60)));
    }

    #[test]
    fn interval_separator_styles() {
        assert_eq!(parse_interval("41-71"), Some((41, 71)));
        assert_eq!(parse_interval("41 – 71"), Some((41, 71)));
        assert_eq!(parse_interval("41 to 71"), Some((41, 71)));
        assert_eq!(parse_interval("between 41 and 71"), Some((41, 71)));
    }

    #[test]
    fn interval_fallback_exactly_two_integers() {
        assert_eq!(parse_interval("lo=50 hi=60"), Some((50, 60)));
        assert_eq!(parse_interval("50 60 70"), None);
        assert_eq!(parse_interval("just 50"), None);
    }

    #[test]
    fn interval_rejects_reversed_and_out_of_range() {
        assert_eq!(parse_interval("71-41"), None);
        assert_eq!(parse_interval("90 to 120"), None);
        assert_eq!(parse_interval("from 95 to 105"), None);
    }

    #[test]
    fn interval_skips_fractional_values() {
        assert_eq!(parse_interval("40.5 to 70.5"), None);
        assert_eq!(
            parse_interval("40.0 to 70.0"),
            Some((40, 70)),
            "integral-valued decimals qualify"
        );
    }

    #[test]
    fn interval_zero_width_allowed_by_parser() {
        // Width enforcement is the grader's job, not the parser's.
        assert_eq!(parse_interval("55 to 55"), Some((55, 55)));
    }

    #[test]
    fn interval_skips_out_of_range_middle_token() {
        assert_eq!(parse_interval("41, 999, 71"), Some((41, 71)));
    }

    #[test]
    fn parsed_answer_serializes_snake_case() {
        let ans = ParsedAnswer::Interval { lo: 41, hi: 71 };
        let json = serde_json::to_string(&ans).unwrap();
        assert_eq!(json, "{\"interval\":{\"lo\":41,\"hi\":71}}");
        let inv = ParsedAnswer::Invalid("??".to_string());
        assert_eq!(serde_json::to_string(&inv).unwrap(), "{\"invalid\":\"??\"}");
        let ord = ParsedAnswer::Ordinal(OrdinalAnswer::Between);
        assert_eq!(
            serde_json::to_string(&ord).unwrap(),
            "{\"ordinal\":\"between\"}"
        );
    }

    #[test]
    fn display_labels_for_feedback_text() {
        assert_eq!(OrdinalAnswer::Between.to_string(), "between");
        assert_eq!(BinaryAnswer::Higher.to_string(), "higher");
    }
}
