//! Word producers: prompt construction and reply parsing for chat-model
//! players, and the embedding-space agents used for offline play.

mod agent;
mod prompt;
mod reply;

pub use agent::{AgentError, AgentPolicy};
pub use prompt::{
    build_round_prompt, build_system_prompt, chat_messages, ChatMessage, Role, PROMPT_VERSION,
};
pub use reply::{parse_word_reply, UnparseableReply};
