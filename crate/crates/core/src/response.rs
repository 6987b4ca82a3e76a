use std::fmt;

use serde::{Deserialize, Serialize};

/// The three possible answers to a comparison `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Response {
    /// `i ~ j`
    Indecision = 0,
    /// `i > j`
    PreferFirst = 1,
    /// `i < j`
    PreferSecond = 2,
}

impl Response {
    pub const ALL: [Response; 3] = [
        Response::Indecision,
        Response::PreferFirst,
        Response::PreferSecond,
    ];

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Response::Indecision),
            1 => Some(Response::PreferFirst),
            2 => Some(Response::PreferSecond),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_strict(self) -> bool {
        self != Response::Indecision
    }

    /// The response to the same comparison with the items swapped.
    pub fn swapped(self) -> Self {
        match self {
            Response::Indecision => Response::Indecision,
            Response::PreferFirst => Response::PreferSecond,
            Response::PreferSecond => Response::PreferFirst,
        }
    }
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// A subset of `{0, 1, 2}`, stored as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ResponseSet(u8);

impl ResponseSet {
    pub const EMPTY: ResponseSet = ResponseSet(0);
    pub const ALL: ResponseSet = ResponseSet(0b111);

    pub fn from_responses(responses: &[Response]) -> Self {
        responses.iter().fold(Self::EMPTY, |s, &r| s.with(r))
    }

    pub fn with(self, r: Response) -> Self {
        ResponseSet(self.0 | (1 << r.index()))
    }

    pub fn insert(&mut self, r: Response) {
        *self = self.with(r);
    }

    pub fn contains(self, r: Response) -> bool {
        self.0 & (1 << r.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Response> {
        Response::ALL.into_iter().filter(move |&r| self.contains(r))
    }

    /// Mirror image under swapping the two items.
    pub fn swapped(self) -> Self {
        self.iter().fold(Self::EMPTY, |s, r| s.with(r.swapped()))
    }
}

impl fmt::Display for ResponseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes: Vec<String> = self.iter().map(|r| r.to_string()).collect();
        write!(f, "{{{}}}", codes.join(","))
    }
}
