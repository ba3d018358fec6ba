import { CHARACTERISTICS } from './types.js';
import type { LeafView, ReportView } from './types.js';
import { escapeHtml, formatScore } from './model.js';

export interface VerdictDelta {
  characteristic: string;
  /** null when the side has no report or does not assess the characteristic */
  from: boolean | null;
  to: boolean | null;
  changed: boolean;
  improved: boolean;
  regressed: boolean;
}

export interface CompareModel {
  parentText: string | null;
  parentScore: number | null;
  leafText: string;
  leafScore: number | null;
  deltas: VerdictDelta[];
}

function verdictOf(report: ReportView | null, characteristic: string): boolean | null {
  if (!report) return null;
  if (!report.assessed.includes(characteristic)) return null;
  const verdict = report.verdicts[characteristic];
  return verdict ? verdict.fulfilled : null;
}

/** Side-by-side model of a leaf against its parent (single column for roots). */
export function compareLeaf(leaf: LeafView): CompareModel {
  const parent = leaf.parent;
  const deltas: VerdictDelta[] = [];
  for (const characteristic of CHARACTERISTICS) {
    const from = verdictOf(parent ? parent.report : null, characteristic);
    const to = verdictOf(leaf.report, characteristic);
    if (from === null && to === null) continue;
    const changed = parent !== null && from !== to;
    deltas.push({
      characteristic,
      from,
      to,
      changed,
      improved: changed && to === true,
      regressed: changed && from === true && to !== true,
    });
  }
  return {
    parentText: parent ? parent.requirement.text : null,
    parentScore: parent ? parent.score : null,
    leafText: leaf.requirement.text,
    leafScore: leaf.score,
    deltas,
  };
}

export function changedDeltas(model: CompareModel): VerdictDelta[] {
  return model.deltas.filter((delta) => delta.changed);
}

function mark(value: boolean | null): string {
  if (value === null) return '–';
  return value ? 'Yes' : 'No';
}

/** Render the comparison panel; pure string in, string out. */
export function renderCompare(model: CompareModel): string {
  const single = model.parentText === null;
  const columns = single
    ? `<div class="compare-col"><h4>requirement</h4>
         <p class="req-text">${escapeHtml(model.leafText)}</p>
         <p class="score">score ${formatScore(model.leafScore)}</p></div>`
    : `<div class="compare-col"><h4>before</h4>
         <p class="req-text">${escapeHtml(model.parentText ?? '')}</p>
         <p class="score">score ${formatScore(model.parentScore)}</p></div>
       <div class="compare-col"><h4>after</h4>
         <p class="req-text">${escapeHtml(model.leafText)}</p>
         <p class="score">score ${formatScore(model.leafScore)}</p></div>`;

  const rows = changedDeltas(model)
    .map((delta) => {
      const kind = delta.improved ? 'improved' : delta.regressed ? 'regressed' : 'changed';
      return `<li class="delta ${kind}">${escapeHtml(delta.characteristic)}: ${mark(delta.from)} → ${mark(delta.to)}</li>`;
    })
    .join('');
  const deltaBlock = single
    ? ''
    : `<ul class="deltas">${rows || '<li class="delta none">no verdict changes</li>'}</ul>`;

  return `<div class="compare">${columns}${deltaBlock}</div>`;
}
