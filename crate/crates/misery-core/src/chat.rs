//! Chat conversation primitives: roles, turns, and the transcript
//! structure persisted for audit.
//!
//! A distinct [`Role::Feedback`] marks host feedback injected between
//! questions. On the wire it is indistinguishable from a user turn
//! (models receive it as `user`), but transcripts keep the distinction
//! so a reader can tell feedback from questions.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Speaker of a chat turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    /// Host feedback; sent to models as a `user` turn.
    #[serde(rename = "feedback-as-user")]
    Feedback,
}

impl Role {
    /// Role string used in provider payloads.
    pub fn wire_name(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User | Role::Feedback => "user",
            Role::Assistant => "assistant",
        }
    }

    /// True for turns the model should answer (user and feedback).
    pub fn speaks_to_model(self) -> bool {
        matches!(self, Role::User | Role::Feedback)
    }
}

/// One message in a conversation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: Role,
    pub content: String,
}

impl ChatTurn {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }

    pub fn feedback(content: impl Into<String>) -> Self {
        Self {
            role: Role::Feedback,
            content: content.into(),
        }
    }
}

/// An ordered conversation. Serializes to the turn list directly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    pub turns: Vec<ChatTurn>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, turn: ChatTurn) {
        self.turns.push(turn);
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn last_assistant(&self) -> Option<&str> {
        self.turns
            .iter()
            .rev()
            .find(|t| t.role == Role::Assistant)
            .map(|t| t.content.as_str())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ChatError {
    #[error("conversation is empty")]
    EmptyConversation,
    #[error("conversation must end with a user or feedback turn, found {0:?}")]
    DanglingTurn(Role),
    #[error("turns {0} and {1} are both assistant turns")]
    ConsecutiveAssistantTurns(usize, usize),
    #[error("system turn at position {0} (only allowed first)")]
    MisplacedSystemTurn(usize),
}

/// Checks the shape every completion backend requires: non-empty, at
/// most one system turn and only in front, no two assistant turns in a
/// row, and a user-facing turn at the end awaiting the reply.
pub fn validate_turns(turns: &[ChatTurn]) -> Result<(), ChatError> {
    let last = turns.last().ok_or(ChatError::EmptyConversation)?;
    if !last.role.speaks_to_model() {
        return Err(ChatError::DanglingTurn(last.role));
    }
    for (i, turn) in turns.iter().enumerate() {
        if turn.role == Role::System && i != 0 {
            return Err(ChatError::MisplacedSystemTurn(i));
        }
        if turn.role == Role::Assistant && i > 0 && turns[i - 1].role == Role::Assistant {
            return Err(ChatError::ConsecutiveAssistantTurns(i - 1, i));
        }
    }
    Ok(())
}
