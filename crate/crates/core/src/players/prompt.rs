//! Prompt text for chat-model players.
//!
//! The wording is versioned: any change to these strings must bump
//! [`PROMPT_VERSION`], which is stored with every game.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::game::{GameState, Seat};

pub const PROMPT_VERSION: &str = "wsc-prompt-v1";

const SYSTEM_PROMPT: &str = "You are playing a word synchronization game with a partner. \
The goal is for both of you to say the same word in the same round. \
Every round, each player says one word at the same time, without seeing the partner's word. \
After the round, both words are revealed. \
A word that was already said in any earlier round, by either player, can never be used again. \
Use the words of the previous round to guess what your partner will say next, so that you both say the same word. \
Reply with one word only: no punctuation, no quotes, no explanation.";

const GOAL_REMINDER: &str = "Remember: the goal is for you and your partner to say the same word.";

pub fn build_system_prompt() -> String {
    SYSTEM_PROMPT.to_string()
}

/// Prompt for the next round from the point of view of `seat`. Only
/// completed rounds are visible, so the opponent's word for the round being
/// played never appears.
pub fn build_round_prompt(state: &GameState, seat: Seat) -> String {
    round_prompt_after(state, seat, state.rounds().len())
}

/// Prompt for round `completed + 1`, looking only at the first `completed`
/// rounds of the game.
fn round_prompt_after(state: &GameState, seat: Seat, completed: usize) -> String {
    let round = completed + 1;
    if completed == 0 {
        return format!(
            "Round {round}. {GOAL_REMINDER}\nThis is the first round: choose any word you like.\nReply with one word only."
        );
    }
    let previous = &state.rounds()[completed - 1];
    let mut used: Vec<&str> = state.rounds()[..completed]
        .iter()
        .flat_map(|r| [r.word_a.as_str(), r.word_b.as_str()])
        .collect();
    used.sort_unstable();
    used.dedup();
    format!(
        "Round {round}. {GOAL_REMINDER}\nYour partner's last word: {}\nYour last word: {}\nWords already used (you cannot use them again): {}\nReply with one word only.",
        previous.word(seat.other()),
        previous.word(seat),
        used.join(", "),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    fn new(role: Role, content: String) -> ChatMessage {
        ChatMessage { role, content }
    }
}

/// Full message list for one completion request. With `own_turns` the
/// player's earlier words are replayed as assistant turns, each preceded by
/// the prompt it answered; otherwise only the system and current prompt are
/// sent and history travels through the used-word list alone.
pub fn chat_messages(state: &GameState, seat: Seat, own_turns: bool) -> Vec<ChatMessage> {
    let mut messages = alloc::vec![ChatMessage::new(Role::System, build_system_prompt())];
    if own_turns {
        for (i, round) in state.rounds().iter().enumerate() {
            messages.push(ChatMessage::new(Role::User, round_prompt_after(state, seat, i)));
            messages.push(ChatMessage::new(
                Role::Assistant,
                round.word(seat).as_str().to_string(),
            ));
        }
    }
    messages.push(ChatMessage::new(Role::User, build_round_prompt(state, seat)));
    messages
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameConfig;
    use crate::word::Word;

    fn state_after(rounds: &[(&str, &str)]) -> GameState {
        let mut s = GameState::new(GameConfig::default()).unwrap();
        for (a, b) in rounds {
            s.submit_round(Word::parse(a).unwrap(), Word::parse(b).unwrap(), true, true)
                .unwrap();
        }
        s
    }

    #[test]
    fn system_prompt_content() {
        let p = build_system_prompt();
        assert!(p.contains("same word"));
        assert!(p.contains("one word"));
        assert_eq!(p, build_system_prompt());
    }

    #[test]
    fn first_round_has_no_history() {
        let p = build_round_prompt(&state_after(&[]), Seat::A);
        assert!(p.contains("same word"));
        assert!(p.contains("any word"));
        assert!(!p.contains("already used"));
    }

    #[test]
    fn second_round_names_opponent_word_and_used_list() {
        let s = state_after(&[("banana", "pineapple")]);
        let a = build_round_prompt(&s, Seat::A);
        assert!(a.contains("Your partner's last word: pineapple"));
        assert!(a.contains("(you cannot use them again): banana, pineapple"));
        assert!(a.contains("same word"));
        let b = build_round_prompt(&s, Seat::B);
        assert!(b.contains("Your partner's last word: banana"));
    }

    #[test]
    fn messages_with_and_without_own_turns() {
        let s = state_after(&[("sky", "cloud"), ("rain", "storm")]);
        let with = chat_messages(&s, Seat::B, true);
        assert_eq!(with.len(), 6);
        assert_eq!(with[0].role, Role::System);
        assert_eq!(with[2], ChatMessage::new(Role::Assistant, "cloud".into()));
        assert_eq!(with[4].content, "storm");
        assert!(with[3].content.contains("Your partner's last word: sky"));
        assert!(!with[3].content.contains("rain"));
        let without = chat_messages(&s, Seat::B, false);
        assert_eq!(without.len(), 2);
        assert_eq!(without[1].content, build_round_prompt(&s, Seat::B));
    }
}
