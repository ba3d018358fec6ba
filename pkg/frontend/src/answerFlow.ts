import { ApiClient, ApiError, ConflictError } from './api.js';
import type { SessionSummary } from './types.js';

export interface AnswerDraft {
  exchangeId: string;
  answer: string;
  source?: string;
}

export interface SubmitOutcome {
  /** exchange ids this flow successfully wrote */
  submitted: string[];
  /** exchange ids the server already had an answer for (write-once) */
  alreadyAnswered: string[];
  /** exchange ids that could not be submitted, with the error message */
  failed: { exchangeId: string; error: string }[];
  /** the post-advance session summary, when advancing was possible */
  session: SessionSummary | null;
}

/**
 * Submit every drafted answer, then advance the session.
 *
 * Submissions are idempotent from the user's point of view: a transport
 * failure is retried once, and a 409 on the retry means the first attempt
 * actually landed (the server's write-once rule guarantees no answer can be
 * stored twice), so it counts as submitted rather than as an error. The
 * session is only advanced when nothing failed outright.
 */
export async function submitAnswers(
  client: ApiClient,
  sessionId: string,
  drafts: AnswerDraft[],
  retries = 1,
): Promise<SubmitOutcome> {
  const outcome: SubmitOutcome = {
    submitted: [],
    alreadyAnswered: [],
    failed: [],
    session: null,
  };

  for (const draft of drafts) {
    if (!draft.answer.trim()) {
      outcome.failed.push({ exchangeId: draft.exchangeId, error: 'empty answer' });
      continue;
    }
    let attempt = 0;
    for (;;) {
      try {
        await client.postAnswer(sessionId, draft.exchangeId, draft.answer, draft.source);
        outcome.submitted.push(draft.exchangeId);
        break;
      } catch (error) {
        if (error instanceof ConflictError) {
          outcome.alreadyAnswered.push(draft.exchangeId);
          break;
        }
        const transport = !(error instanceof ApiError);
        if (transport && attempt < retries) {
          attempt += 1;
          continue;
        }
        outcome.failed.push({
          exchangeId: draft.exchangeId,
          error: error instanceof Error ? error.message : String(error),
        });
        break;
      }
    }
  }

  if (outcome.failed.length === 0 && drafts.length > 0) {
    outcome.session = await client.advance(sessionId);
  }
  return outcome;
}
