//! Rule-based blackjack basic strategy for a single hand.
//!
//! Rules are evaluated in a fixed order: natural blackjack, two-card
//! pairs, two-card soft hands (an ace plus one other card), then hard
//! totals. Face cards count as ten throughout.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::CardLabel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("a face-down card has no rank")]
    NotARank,
    #[error("invalid rank {0:?}")]
    InvalidRank(String),
    #[error("invalid hand: need at least {need} cards, got {got}")]
    InvalidHand { need: usize, got: usize },
    #[error("dealer upcard is not visible")]
    UpcardNotVisible,
}

/// Card value as used by the strategy tables; J, Q and K are `Ten`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Rank {
    Two,
    Three,
    Four,
    Five,
    Six,
    Seven,
    Eight,
    Nine,
    Ten,
    Ace,
}

impl Rank {
    pub const ALL: [Rank; 10] = [
        Rank::Two,
        Rank::Three,
        Rank::Four,
        Rank::Five,
        Rank::Six,
        Rank::Seven,
        Rank::Eight,
        Rank::Nine,
        Rank::Ten,
        Rank::Ace,
    ];

    /// Pip value with the ace counted as 11.
    pub fn value(self) -> u32 {
        match self {
            Rank::Ace => 11,
            r => r as u32 + 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Rank::Two => "2",
            Rank::Three => "3",
            Rank::Four => "4",
            Rank::Five => "5",
            Rank::Six => "6",
            Rank::Seven => "7",
            Rank::Eight => "8",
            Rank::Nine => "9",
            Rank::Ten => "10",
            Rank::Ace => "A",
        }
    }

    fn is_ace(self) -> bool {
        self == Rank::Ace
    }

    /// True for a numeric dealer card within `lo..=hi`; never for an ace.
    fn between(self, lo: u32, hi: u32) -> bool {
        !self.is_ace() && (lo..=hi).contains(&self.value())
    }
}

impl fmt::Display for Rank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepts `2`-`10`, `J`, `Q`, `K`, `A` (case-insensitive for letters).
impl FromStr for Rank {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_uppercase();
        match t.as_str() {
            "J" | "Q" | "K" => Ok(Rank::Ten),
            other => Rank::ALL
                .iter()
                .copied()
                .find(|r| r.as_str() == other)
                .ok_or_else(|| StrategyError::InvalidRank(s.to_string())),
        }
    }
}

impl From<Rank> for String {
    fn from(r: Rank) -> Self {
        r.as_str().to_string()
    }
}

impl TryFrom<String> for Rank {
    type Error = StrategyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

pub fn normalize_rank(label: CardLabel) -> Result<Rank, StrategyError> {
    Ok(match label {
        CardLabel::Two => Rank::Two,
        CardLabel::Three => Rank::Three,
        CardLabel::Four => Rank::Four,
        CardLabel::Five => Rank::Five,
        CardLabel::Six => Rank::Six,
        CardLabel::Seven => Rank::Seven,
        CardLabel::Eight => Rank::Eight,
        CardLabel::Nine => Rank::Nine,
        CardLabel::Ten | CardLabel::Jack | CardLabel::Queen | CardLabel::King => Rank::Ten,
        CardLabel::Ace => Rank::Ace,
        CardLabel::Back => return Err(StrategyError::NotARank),
    })
}

/// A player's cards, aces first and then descending by value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Hand(Vec<Rank>);

impl Hand {
    pub fn new(mut cards: Vec<Rank>) -> Result<Self, StrategyError> {
        if cards.is_empty() {
            return Err(StrategyError::InvalidHand { need: 1, got: 0 });
        }
        cards.sort_by(|a, b| b.value().cmp(&a.value()));
        Ok(Self(cards))
    }

    pub fn cards(&self) -> &[Rank] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl FromStr for Hand {
    type Err = StrategyError;

    /// Comma-separated rank tokens, e.g. `A,7` or `Q, 6`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cards = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Rank>, _>>()?;
        Hand::new(cards)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    Hit,
    Stand,
    Double,
    Split,
    DontSplit,
    DoubleDownSplitElseHit,
    BlackjackWin,
}

impl Move {
    pub const ALL: [Move; 7] = [
        Move::Hit,
        Move::Stand,
        Move::Double,
        Move::Split,
        Move::DontSplit,
        Move::DoubleDownSplitElseHit,
        Move::BlackjackWin,
    ];

    pub fn display(self) -> &'static str {
        match self {
            Move::Hit => "Hit.",
            Move::Stand => "Stand.",
            Move::Double => "Double.",
            Move::Split => "Split.",
            Move::DontSplit => "Don't split.",
            Move::DoubleDownSplitElseHit => "Double Down Split. If not possible, then hit.",
            Move::BlackjackWin => "Blackjack, you win!",
        }
    }

    /// Machine name, as used in JSON.
    pub fn code(self) -> &'static str {
        match self {
            Move::Hit => "hit",
            Move::Stand => "stand",
            Move::Double => "double",
            Move::Split => "split",
            Move::DontSplit => "dont_split",
            Move::DoubleDownSplitElseHit => "double_down_split_else_hit",
            Move::BlackjackWin => "blackjack_win",
        }
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display())
    }
}

/// Best total not above 21 when aces allow it: every ace starts at 11 and
/// drops to 1 while the hand is over 21. A bust total is returned as is.
pub fn calculate_hand_total(hand: &Hand) -> u32 {
    let mut total: u32 = hand.cards().iter().map(|r| r.value()).sum();
    let mut aces = hand.cards().iter().filter(|r| r.is_ace()).count();
    while total > 21 && aces > 0 {
        total -= 10;
        aces -= 1;
    }
    total
}

pub fn recommend(player: &Hand, dealer: Rank) -> Result<Move, StrategyError> {
    let cards = player.cards();
    if cards.len() < 2 {
        return Err(StrategyError::InvalidHand {
            need: 2,
            got: cards.len(),
        });
    }
    if cards == [Rank::Ace, Rank::Ten] {
        return Ok(Move::BlackjackWin);
    }
    if cards.len() == 2 && cards[0] == cards[1] {
        return Ok(pair_move(cards[0], dealer));
    }
    if cards.len() == 2 && cards[0].is_ace() {
        return Ok(soft_move(cards[1], dealer));
    }
    Ok(hard_move(calculate_hand_total(player), dealer))
}

fn pair_move(card: Rank, dealer: Rank) -> Move {
    use Rank::*;
    match card {
        Ace | Eight => Move::Split,
        Five | Ten => Move::DontSplit,
        Nine => {
            if matches!(dealer, Seven | Ten | Ace) {
                Move::DontSplit
            } else {
                Move::Split
            }
        }
        Two | Three | Four | Six | Seven => {
            let mut mv = Move::DontSplit;
            if matches!(dealer, Eight | Nine | Ten | Ace) {
                mv = Move::DontSplit;
            } else if matches!(card, Two | Three | Seven) && dealer.between(2, 7) {
                mv = Move::Split;
            }
            // later rules override the ones above
            if matches!(card, Two | Three) && matches!(dealer, Two | Three) {
                mv = Move::DoubleDownSplitElseHit;
            }
            if card == Six {
                if dealer.between(3, 6) {
                    mv = Move::Split;
                } else if dealer == Two {
                    mv = Move::DoubleDownSplitElseHit;
                }
            }
            if card == Four && matches!(dealer, Five | Six) {
                mv = Move::DoubleDownSplitElseHit;
            }
            mv
        }
    }
}

fn soft_move(second: Rank, dealer: Rank) -> Move {
    use Rank::*;
    match second {
        Eight | Nine => {
            if second == Eight && dealer == Six {
                Move::Double
            } else {
                Move::Stand
            }
        }
        Seven => {
            if dealer.between(2, 6) {
                Move::Double
            } else if dealer.between(7, 8) {
                Move::Stand
            } else {
                Move::Hit
            }
        }
        _ => {
            if matches!(dealer, Five | Six)
                || (dealer == Four && matches!(second, Four | Five | Six))
                || (dealer == Three && second == Six)
            {
                Move::Double
            } else {
                Move::Hit
            }
        }
    }
}

fn hard_move(total: u32, dealer: Rank) -> Move {
    match total {
        t if t >= 17 => Move::Stand,
        13..=16 if dealer.between(2, 6) => Move::Stand,
        12 if dealer.between(4, 6) => Move::Stand,
        11 => Move::Double,
        10 if dealer.between(2, 9) => Move::Double,
        9 if dealer.between(3, 6) => Move::Double,
        _ => Move::Hit,
    }
}

/// Who a detected card belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Player,
    Dealer,
    Unassigned,
}

/// How detected cards are split between dealer and player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RoleConfig {
    /// Two-group clustering of card centres by height; the upper group deals.
    #[default]
    Auto,
    /// Cards whose centre lies above this fraction of the image height deal.
    SplitFraction(f64),
}

/// Assigns each card centre (`y` in pixels) a role.
///
/// With [`RoleConfig::Auto`] the centres are split by exact 1-D 2-means;
/// if all centres fall within 5% of the image height everything is the
/// player's.
pub fn assign_roles(center_ys: &[f64], image_height: f64, cfg: &RoleConfig) -> Vec<Role> {
    match *cfg {
        RoleConfig::SplitFraction(frac) => center_ys
            .iter()
            .map(|&y| if y < frac * image_height { Role::Dealer } else { Role::Player })
            .collect(),
        RoleConfig::Auto => {
            if center_ys.is_empty() {
                return Vec::new();
            }
            let lo = center_ys.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = center_ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if hi - lo <= 0.05 * image_height {
                return vec![Role::Player; center_ys.len()];
            }
            let mut sorted = center_ys.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            let sse = |v: &[f64]| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
            };
            let split = (1..sorted.len())
                .min_by(|&a, &b| {
                    let ca = sse(&sorted[..a]) + sse(&sorted[a..]);
                    let cb = sse(&sorted[..b]) + sse(&sorted[b..]);
                    ca.partial_cmp(&cb).unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(1);
            let boundary = (sorted[split - 1] + sorted[split]) / 2.0;
            center_ys
                .iter()
                .map(|&y| if y < boundary { Role::Dealer } else { Role::Player })
                .collect()
        }
    }
}

/// First visible dealer card, skipping the face-down hole card.
pub fn dealer_upcard(dealer_cards: &[CardLabel]) -> Result<Rank, StrategyError> {
    dealer_cards
        .iter()
        .find(|l| **l != CardLabel::Back)
        .map(|&l| normalize_rank(l))
        .unwrap_or(Err(StrategyError::UpcardNotVisible))
}
