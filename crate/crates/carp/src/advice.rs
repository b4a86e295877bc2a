//! Rank-token parsing shared by `carp recommend` and `POST /api/recommend`.

use carp_core::strategy::{recommend, Hand, Move, Rank, StrategyError};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdviceError {
    #[error("invalid rank token {0:?} (expected 2-10, J, Q, K or A)")]
    BadToken(String),
    #[error("invalid hand: the player needs at least two cards, got {0}")]
    InvalidHand(usize),
}

fn rank(token: &str) -> Result<Rank, AdviceError> {
    token.parse().map_err(|_| AdviceError::BadToken(token.to_owned()))
}

/// Parses the tokens and asks the strategy engine for a move.
pub fn recommend_tokens<S: AsRef<str>>(player: &[S], dealer: &str) -> Result<Move, AdviceError> {
    let cards = player.iter().map(|t| rank(t.as_ref())).collect::<Result<Vec<_>, _>>()?;
    let dealer = rank(dealer)?;
    let n = cards.len();
    let hand = Hand::new(cards).map_err(|_| AdviceError::InvalidHand(n))?;
    recommend(&hand, dealer).map_err(|e| match e {
        StrategyError::InvalidHand { got, .. } => AdviceError::InvalidHand(got),
        other => AdviceError::BadToken(other.to_string()),
    })
}

/// Splits a comma-separated `--player` value into tokens.
pub fn split_tokens(list: &str) -> Vec<String> {
    list.split(',').map(|t| t.trim().to_owned()).filter(|t| !t.is_empty()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_faces_and_rejects_junk() {
        assert_eq!(recommend_tokens(&["Q", "6"], "10"), Ok(Move::Hit));
        assert_eq!(recommend_tokens(&["a", "10"], "5"), Ok(Move::BlackjackWin));
        assert_eq!(recommend_tokens(&["9"], "5"), Err(AdviceError::InvalidHand(1)));
        assert_eq!(recommend_tokens::<&str>(&[], "5"), Err(AdviceError::InvalidHand(0)));
        assert!(matches!(recommend_tokens(&["1", "6"], "5"), Err(AdviceError::BadToken(_))));
        assert!(matches!(recommend_tokens(&["6", "6"], "BACK"), Err(AdviceError::BadToken(_))));
    }

    #[test]
    fn splits_lists() {
        assert_eq!(split_tokens(" A, 7 ,"), vec!["A", "7"]);
    }
}
