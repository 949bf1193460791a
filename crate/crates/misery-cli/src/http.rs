//! HTTP backends: a chat-completions client implementing
//! [`ChatCompleter`] and a remote embedding provider implementing
//! [`Embedder`].
//!
//! Credentials are read from named environment variables at
//! construction time; the secret value never reaches configs, reports,
//! logs, or `Debug` output. Transport failures (connection, timeout,
//! interrupted body) are retried with exponential backoff; protocol
//! failures (non-2xx status, malformed reply) are never retried.

use std::fmt;
use std::time::{Duration, Instant};

use misery_core::backend::{
    BackendError, BackendKind, BackendReply, CallMeta, ChatCompleter, ModelSpec,
};
use misery_core::chat::{validate_turns, ChatTurn};
use misery_core::embed::{EmbedError, Embedder, EmbeddingVector};
use serde::{Deserialize, Serialize};

const BODY_EXCERPT_CHARS: usize = 200;
const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
const DEFAULT_INITIAL_BACKOFF: Duration = Duration::from_secs(1);

/// How the credential is presented to the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum AuthStyle {
    /// `Authorization: Bearer <secret>`.
    #[default]
    Bearer,
    /// `api-key: <secret>`, as used by Azure-style deployments.
    ApiKey,
}

impl AuthStyle {
    fn header(self, secret: &str) -> (&'static str, String) {
        match self {
            AuthStyle::Bearer => ("authorization", format!("Bearer {secret}")),
            AuthStyle::ApiKey => ("api-key", secret.to_string()),
        }
    }
}

fn read_credential(env_name: &str) -> Result<String, BackendError> {
    std::env::var(env_name).map_err(|_| BackendError::MissingCredential(env_name.to_string()))
}

fn build_agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(DEFAULT_TIMEOUT))
        .build()
        .new_agent()
}

fn excerpt(body: &str) -> String {
    body.chars().take(BODY_EXCERPT_CHARS).collect()
}

enum Attempt {
    /// The server answered; status plus full body text.
    Answered(u16, String),
    /// The request or body read failed in transit.
    Failed(String),
}

fn post_json<T: Serialize>(
    agent: &ureq::Agent,
    endpoint: &str,
    auth: AuthStyle,
    secret: &str,
    body: &T,
) -> Attempt {
    let (header_name, header_value) = auth.header(secret);
    let sent = agent
        .post(endpoint)
        .header(header_name, &header_value)
        .send_json(body);
    match sent {
        Ok(mut response) => {
            let status = response.status().as_u16();
            match response.body_mut().read_to_string() {
                Ok(text) => Attempt::Answered(status, text),
                Err(e) => Attempt::Failed(e.to_string()),
            }
        }
        Err(e) => Attempt::Failed(e.to_string()),
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: Vec<WireMessage<'a>>,
}

#[derive(Deserialize)]
struct WireChoiceMessage {
    content: String,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireChoiceMessage,
}

#[derive(Deserialize)]
struct WireReply {
    choices: Vec<WireChoice>,
}

/// Chat-completions client for one model endpoint.
pub struct HttpChatBackend {
    agent: ureq::Agent,
    spec: ModelSpec,
    endpoint: String,
    auth: AuthStyle,
    secret: String,
    initial_backoff: Duration,
}

impl fmt::Debug for HttpChatBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpChatBackend")
            .field("model", &self.spec.model_name)
            .field("endpoint", &self.endpoint)
            .field("auth", &self.auth)
            .finish_non_exhaustive()
    }
}

impl HttpChatBackend {
    /// Validates `spec` and reads the credential from the environment
    /// variable it names.
    pub fn new(spec: ModelSpec, auth: AuthStyle) -> Result<Self, BackendError> {
        spec.validate()?;
        if spec.backend_kind != BackendKind::HttpChat {
            return Err(BackendError::InvalidSpec(format!(
                "HttpChatBackend needs backend_kind http_chat, got {:?}",
                spec.backend_kind
            )));
        }
        let endpoint = spec
            .endpoint
            .clone()
            .expect("validate() guarantees an endpoint");
        let env_name = spec
            .credential_env
            .clone()
            .expect("validate() guarantees a credential variable");
        let secret = read_credential(&env_name)?;
        Ok(Self {
            agent: build_agent(),
            spec,
            endpoint,
            auth,
            secret,
            initial_backoff: DEFAULT_INITIAL_BACKOFF,
        })
    }

    /// Overrides the first retry delay (tests use short values).
    pub fn with_initial_backoff_ms(mut self, ms: u64) -> Self {
        self.initial_backoff = Duration::from_millis(ms);
        self
    }

    fn parse_success(status: u16, body: &str) -> Result<String, BackendError> {
        let protocol = |message: String| BackendError::Protocol {
            status,
            body_excerpt: message,
        };
        let reply: WireReply = serde_json::from_str(body)
            .map_err(|e| protocol(format!("unparseable reply ({e}): {}", excerpt(body))))?;
        let first = reply
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| protocol(format!("reply has no choices: {}", excerpt(body))))?;
        Ok(first.message.content)
    }
}

impl ChatCompleter for HttpChatBackend {
    fn id(&self) -> String {
        self.spec.model_name.clone()
    }

    fn complete(&mut self, turns: &[ChatTurn]) -> Result<BackendReply, BackendError> {
        validate_turns(turns)?;
        let request = WireRequest {
            model: &self.spec.model_name,
            temperature: self.spec.temperature,
            messages: turns
                .iter()
                .map(|t| WireMessage {
                    role: t.role.wire_name(),
                    content: &t.content,
                })
                .collect(),
        };

        let start = Instant::now();
        let mut backoff = self.initial_backoff;
        let mut attempt = 0u32;
        loop {
            attempt += 1;
            match post_json(
                &self.agent,
                &self.endpoint,
                self.auth,
                &self.secret,
                &request,
            ) {
                Attempt::Answered(status, body) => {
                    if !(200..300).contains(&status) {
                        return Err(BackendError::Protocol {
                            status,
                            body_excerpt: excerpt(&body),
                        });
                    }
                    let text = Self::parse_success(status, &body)?;
                    return Ok(BackendReply {
                        text,
                        meta: CallMeta {
                            backend: self.spec.model_name.clone(),
                            attempts: attempt,
                            latency_ms: start.elapsed().as_millis() as u64,
                        },
                    });
                }
                Attempt::Failed(message) => {
                    if attempt >= self.spec.max_attempts {
                        return Err(BackendError::Transport {
                            attempts: attempt,
                            message,
                        });
                    }
                    std::thread::sleep(backoff);
                    backoff *= 2;
                }
            }
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedReply {
    vectors: Vec<Vec<f64>>,
}

/// Remote embedding provider speaking
/// `{input: [texts]} -> {vectors: [[real]]}`.
pub struct HttpEmbedder {
    agent: ureq::Agent,
    name: String,
    endpoint: String,
    auth: AuthStyle,
    secret: String,
}

impl fmt::Debug for HttpEmbedder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpEmbedder")
            .field("name", &self.name)
            .field("endpoint", &self.endpoint)
            .field("auth", &self.auth)
            .finish_non_exhaustive()
    }
}

impl HttpEmbedder {
    pub fn new(
        name: impl Into<String>,
        endpoint: impl Into<String>,
        credential_env: &str,
        auth: AuthStyle,
    ) -> Result<Self, EmbedError> {
        let secret =
            read_credential(credential_env).map_err(|e| EmbedError::Provider(e.to_string()))?;
        Ok(Self {
            agent: build_agent(),
            name: name.into(),
            endpoint: endpoint.into(),
            auth,
            secret,
        })
    }
}

impl Embedder for HttpEmbedder {
    fn id(&self) -> String {
        self.name.clone()
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let request = EmbedRequest { input: texts };
        let (status, body) = match post_json(
            &self.agent,
            &self.endpoint,
            self.auth,
            &self.secret,
            &request,
        ) {
            Attempt::Answered(status, body) => (status, body),
            Attempt::Failed(message) => return Err(EmbedError::Provider(message)),
        };
        if !(200..300).contains(&status) {
            return Err(EmbedError::Provider(format!(
                "status {status}: {}",
                excerpt(&body)
            )));
        }
        let reply: EmbedReply = serde_json::from_str(&body).map_err(|e| {
            EmbedError::Provider(format!("unparseable reply ({e}): {}", excerpt(&body)))
        })?;
        if reply.vectors.len() != texts.len() {
            return Err(EmbedError::Provider(format!(
                "asked for {} vectors, got {}",
                texts.len(),
                reply.vectors.len()
            )));
        }
        let mut out = Vec::with_capacity(reply.vectors.len());
        for (i, values) in reply.vectors.into_iter().enumerate() {
            if values.iter().any(|v| !v.is_finite()) {
                return Err(EmbedError::Provider(format!(
                    "vector {i} has non-finite entries"
                )));
            }
            let vector = EmbeddingVector::new(values);
            if vector.norm() == 0.0 {
                return Err(EmbedError::Provider(format!("vector {i} has zero norm")));
            }
            out.push(vector);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn http_spec(credential_env: &str) -> ModelSpec {
        ModelSpec {
            backend_kind: BackendKind::HttpChat,
            model_name: "m".into(),
            endpoint: Some("http://127.0.0.1:9/v1/chat/completions".into()),
            credential_env: Some(credential_env.into()),
            temperature: 0.0,
            max_attempts: 1,
        }
    }

    #[test]
    fn auth_styles_build_the_right_header() {
        assert_eq!(
            AuthStyle::Bearer.header("s3cr3t"),
            ("authorization", "Bearer s3cr3t".to_string())
        );
        assert_eq!(
            AuthStyle::ApiKey.header("s3cr3t"),
            ("api-key", "s3cr3t".to_string())
        );
    }

    #[test]
    fn auth_style_serde_names() {
        assert_eq!(
            serde_json::to_string(&AuthStyle::Bearer).unwrap(),
            "\"bearer\""
        );
        assert_eq!(
            serde_json::to_string(&AuthStyle::ApiKey).unwrap(),
            "\"api-key\""
        );
    }

    #[test]
    fn missing_credential_is_a_construction_error() {
        let spec = http_spec("MISERY_TEST_NO_SUCH_VAR");
        let err = HttpChatBackend::new(spec, AuthStyle::Bearer).unwrap_err();
        assert!(
            matches!(err, BackendError::MissingCredential(name) if name == "MISERY_TEST_NO_SUCH_VAR")
        );
    }

    #[test]
    fn debug_output_never_contains_the_secret() {
        std::env::set_var("MISERY_TEST_KEY_DEBUG", "super-secret-value");
        let backend =
            HttpChatBackend::new(http_spec("MISERY_TEST_KEY_DEBUG"), AuthStyle::Bearer).unwrap();
        let shown = format!("{backend:?}");
        assert!(!shown.contains("super-secret-value"));

        let embedder = HttpEmbedder::new(
            "emb",
            "http://127.0.0.1:9/embed",
            "MISERY_TEST_KEY_DEBUG",
            AuthStyle::ApiKey,
        )
        .unwrap();
        let shown = format!("{embedder:?}");
        assert!(!shown.contains("super-secret-value"));
    }

    #[test]
    fn wrong_backend_kind_is_rejected() {
        std::env::set_var("MISERY_TEST_KEY_KIND", "x");
        let mut spec = http_spec("MISERY_TEST_KEY_KIND");
        spec.backend_kind = BackendKind::Scripted;
        // Scripted specs skip endpoint validation, so the kind check
        // itself must fire.
        let err = HttpChatBackend::new(spec, AuthStyle::Bearer).unwrap_err();
        assert!(matches!(err, BackendError::InvalidSpec(_)));
    }

    #[test]
    fn success_parsing_extracts_first_choice() {
        let body = r#"{"choices":[{"message":{"content":"42"}},{"message":{"content":"x"}}]}"#;
        assert_eq!(HttpChatBackend::parse_success(200, body).unwrap(), "42");

        let empty = r#"{"choices":[]}"#;
        let err = HttpChatBackend::parse_success(200, empty).unwrap_err();
        assert!(matches!(err, BackendError::Protocol { status: 200, .. }));

        let garbage = "not json";
        let err = HttpChatBackend::parse_success(200, garbage).unwrap_err();
        assert!(matches!(err, BackendError::Protocol { .. }));
    }

    #[test]
    fn excerpt_truncates_long_bodies() {
        let long = "x".repeat(1000);
        assert_eq!(excerpt(&long).chars().count(), 200);
        assert_eq!(excerpt("short"), "short");
    }
}
