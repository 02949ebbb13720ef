//! Integer fields that accept JSON numbers, decimal strings, or `0x`-prefixed
//! hex strings. Serialization always writes a plain JSON number.

use serde::de::{self, Deserializer, Unexpected, Visitor};
use serde::Serializer;
use std::fmt;
use std::marker::PhantomData;

/// Parse a decimal or `0x`-prefixed hex literal. Underscores are allowed as
/// digit separators.
pub fn parse_int_literal(text: &str) -> Option<u64> {
    let t = text.trim().replace('_', "");
    if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        if hex.is_empty() {
            return None;
        }
        u64::from_str_radix(hex, 16).ok()
    } else {
        if t.is_empty() {
            return None;
        }
        t.parse::<u64>().ok()
    }
}

struct IntVisitor<T>(PhantomData<T>);

impl<T: TryFrom<u64>> IntVisitor<T> {
    fn narrow<E: de::Error>(v: u64) -> Result<T, E> {
        T::try_from(v).map_err(|_| E::invalid_value(Unexpected::Unsigned(v), &"an integer in range"))
    }
}

impl<'de, T: TryFrom<u64>> Visitor<'de> for IntVisitor<T> {
    type Value = T;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a non-negative integer (decimal, or a \"0x\" hex string)")
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<T, E> {
        Self::narrow(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<T, E> {
        if v < 0 {
            return Err(E::invalid_value(Unexpected::Signed(v), &self));
        }
        Self::narrow(v as u64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<T, E> {
        match parse_int_literal(v) {
            Some(n) => Self::narrow(n),
            None => Err(E::invalid_value(Unexpected::Str(v), &self)),
        }
    }
}

pub fn deserialize<'de, D, T>(d: D) -> Result<T, D::Error>
where
    D: Deserializer<'de>,
    T: TryFrom<u64>,
{
    d.deserialize_any(IntVisitor(PhantomData))
}

pub fn serialize<S, T>(v: &T, s: S) -> Result<S::Ok, S::Error>
where
    S: Serializer,
    T: Copy + Into<u64>,
{
    s.serialize_u64((*v).into())
}

pub mod option {
    use super::IntVisitor;
    use serde::de::{Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;
    use std::marker::PhantomData;

    struct OptVisitor<T>(PhantomData<T>);

    impl<'de, T: TryFrom<u64>> Visitor<'de> for OptVisitor<T> {
        type Value = Option<T>;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("an optional integer")
        }

        fn visit_none<E: serde::de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }

        fn visit_unit<E: serde::de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }

        fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
            d.deserialize_any(IntVisitor(PhantomData)).map(Some)
        }
    }

    pub fn deserialize<'de, D, T>(d: D) -> Result<Option<T>, D::Error>
    where
        D: Deserializer<'de>,
        T: TryFrom<u64>,
    {
        d.deserialize_option(OptVisitor(PhantomData))
    }

    pub fn serialize<S, T>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error>
    where
        S: Serializer,
        T: Copy + Into<u64>,
    {
        match v {
            Some(n) => s.serialize_some(&(*n).into()),
            None => s.serialize_none(),
        }
    }
}
