// Browser bootstrap: session list in localStorage, board polling, answer flow.

import { ApiClient } from './api.js';
import { submitAnswers } from './answerFlow.js';
import { renderBoard } from './board.js';
import { escapeHtml } from './model.js';
import type { AnswerDraft } from './answerFlow.js';

const STORAGE_KEY = 'reqsmith.sessions';
const client = new ApiClient('');

let currentSession: string | null = null;
let pollTimer: number | null = null;

function knownSessions(): string[] {
  try {
    return JSON.parse(localStorage.getItem(STORAGE_KEY) ?? '[]') as string[];
  } catch {
    return [];
  }
}

function rememberSession(sessionId: string): void {
  const sessions = knownSessions().filter((known) => known !== sessionId);
  sessions.unshift(sessionId);
  localStorage.setItem(STORAGE_KEY, JSON.stringify(sessions.slice(0, 50)));
}

function pollInterval(): number {
  const field = document.querySelector<HTMLInputElement>('#poll-interval');
  const seconds = field ? Number(field.value) : 3;
  return Math.max(1, Number.isFinite(seconds) ? seconds : 3) * 1000;
}

async function refreshBoard(): Promise<void> {
  if (!currentSession) return;
  const board = document.querySelector<HTMLElement>('#board');
  if (!board) return;
  try {
    const summary = await client.getSession(currentSession);
    const questions =
      summary.status === 'awaiting_answers'
        ? await client.getPendingQuestions(currentSession)
        : [];
    board.innerHTML = renderBoard(summary, questions);
    wireQueue();
  } catch (error) {
    board.innerHTML = `<p class="flow-error">${escapeHtml(
      error instanceof Error ? error.message : String(error),
    )}</p>`;
  }
}

function wireQueue(): void {
  document.querySelectorAll<HTMLButtonElement>('.use-suggestion').forEach((button) => {
    button.addEventListener('click', () => {
      const exchange = button.dataset.exchange;
      const area = document.querySelector<HTMLTextAreaElement>(
        `textarea.answer[data-exchange="${exchange}"]`,
      );
      if (area && area.dataset.suggestion) area.value = area.dataset.suggestion;
    });
  });

  const submit = document.querySelector<HTMLButtonElement>('#submit-answers');
  if (!submit) return;
  submit.addEventListener('click', async () => {
    if (!currentSession) return;
    submit.disabled = true;
    const drafts: AnswerDraft[] = [];
    document.querySelectorAll<HTMLTextAreaElement>('textarea.answer').forEach((area) => {
      drafts.push({ exchangeId: area.dataset.exchange ?? '', answer: area.value });
    });
    const outcome = await submitAnswers(client, currentSession, drafts);
    const errorLine = document.querySelector<HTMLElement>('#flow-error');
    if (outcome.failed.length > 0 && errorLine) {
      // typed text stays in place; only the failures are reported
      errorLine.textContent = outcome.failed
        .map((failure) => `${failure.exchangeId}: ${failure.error}`)
        .join('; ');
      submit.disabled = false;
      return;
    }
    await refreshBoard();
  });
}

function renderSessionList(): void {
  const list = document.querySelector<HTMLElement>('#session-list');
  if (!list) return;
  const items = knownSessions()
    .map(
      (sessionId) =>
        `<li><a href="#" data-session="${escapeHtml(sessionId)}">${escapeHtml(
          sessionId.slice(0, 12),
        )}</a></li>`,
    )
    .join('');
  list.innerHTML = items || '<li class="queue-empty">no sessions yet</li>';
  list.querySelectorAll<HTMLAnchorElement>('a[data-session]').forEach((link) => {
    link.addEventListener('click', (event) => {
      event.preventDefault();
      openSession(link.dataset.session ?? '');
    });
  });
}

function openSession(sessionId: string): void {
  currentSession = sessionId;
  rememberSession(sessionId);
  renderSessionList();
  if (pollTimer !== null) window.clearInterval(pollTimer);
  void refreshBoard();
  pollTimer = window.setInterval(() => void refreshBoard(), pollInterval());
}

function wireCreateForm(): void {
  const form = document.querySelector<HTMLFormElement>('#create-form');
  if (!form) return;
  form.addEventListener('submit', async (event) => {
    event.preventDefault();
    const text = form.querySelector<HTMLTextAreaElement>('#new-requirement');
    const mode = form.querySelector<HTMLSelectElement>('#new-mode');
    if (!text || !text.value.trim()) return;
    const summary = await client.createSession(text.value, mode?.value ?? 'interactive');
    text.value = '';
    openSession(summary.id);
  });
}

document.addEventListener('DOMContentLoaded', () => {
  renderSessionList();
  wireCreateForm();
});
