import { compareLeaf, renderCompare } from './compare.js';
import { badgeRow, escapeHtml, formatScore, groupByTarget, lineage, statusLabel } from './model.js';
import type { PendingQuestion, SessionSummary } from './types.js';

function renderBadges(summary: SessionSummary): string {
  return summary.leaves
    .map((leaf) => {
      const badges = badgeRow(leaf)
        .map(
          (badge) =>
            `<span class="badge ${badge.state}" title="${escapeHtml(badge.detail)}">${escapeHtml(
              badge.characteristic.slice(0, 3),
            )}</span>`,
        )
        .join('');
      const pattern = leaf.pattern_id ? `<span class="chip">${escapeHtml(leaf.pattern_id)}</span>` : '';
      const gate = leaf.gate_passed ? 'passed' : 'open';
      return `<div class="leaf" data-leaf-id="${escapeHtml(leaf.requirement.id)}">
        <div class="leaf-head">${pattern}<span class="score">${formatScore(leaf.score)}</span>
          <span class="gate ${gate}">${gate}</span></div>
        <p class="req-text">${escapeHtml(leaf.requirement.text)}</p>
        <div class="badges">${badges}</div>
        ${renderCompare(compareLeaf(leaf))}
      </div>`;
    })
    .join('');
}

function renderQueue(questions: PendingQuestion[]): string {
  if (questions.length === 0) {
    return '<p class="queue-empty">No questions are waiting. The next evaluation runs on advance.</p>';
  }
  const groups = groupByTarget(questions)
    .map(([target, grouped]) => {
      const items = grouped
        .map((question) => {
          const prefill = question.suggested_answer
            ? ` data-suggestion="${escapeHtml(question.suggested_answer)}"`
            : '';
          const suggestion = question.suggested_answer
            ? `<button type="button" class="use-suggestion" data-exchange="${escapeHtml(question.exchange_id)}">use suggested answer</button>
               <span class="provenance">${question.provenance.map(escapeHtml).join(', ')}</span>`
            : '';
          return `<li>
            <label>${escapeHtml(question.text)}</label>
            <textarea class="answer" data-exchange="${escapeHtml(question.exchange_id)}"${prefill}></textarea>
            ${suggestion}
          </li>`;
        })
        .join('');
      return `<fieldset><legend>${escapeHtml(target)}</legend><ul>${items}</ul></fieldset>`;
    })
    .join('');
  return `${groups}<button type="button" id="submit-answers">submit answers &amp; advance</button>
    <p class="flow-error" id="flow-error"></p>`;
}

function renderLineage(summary: SessionSummary): string {
  return lineage(summary)
    .map((node) => {
      const split = node.splitIndex ? ` <span class="chip">split ${node.splitIndex}</span>` : '';
      const pattern = node.patternId ? ` <span class="chip">${escapeHtml(node.patternId)}</span>` : '';
      return `<li style="margin-left:${node.depth * 16}px">${escapeHtml(node.text)}${pattern}${split}</li>`;
    })
    .join('');
}

export function renderBoard(summary: SessionSummary, questions: PendingQuestion[]): string {
  return `
  <section class="session-head">
    <h2>session ${escapeHtml(summary.id.slice(0, 8))}</h2>
    <span class="status ${escapeHtml(summary.status)}">${escapeHtml(statusLabel(summary))}</span>
  </section>
  <section class="panel"><h3>leaves</h3>${renderBadges(summary)}</section>
  <section class="panel"><h3>question queue (${questions.length})</h3>${renderQueue(questions)}</section>
  <section class="panel"><h3>lineage</h3><ul class="lineage">${renderLineage(summary)}</ul></section>`;
}
