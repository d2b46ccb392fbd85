// Wire shapes of the orchestration server's JSON API.

export type Strategy = "conversational" | "stepwise" | "phasewise";

export type EditState = "clean" | "pending" | "submitted";

export type NodeKind =
  | "InputQuery"
  | "ColumnAssumptionsPhase"
  | "PlanPhase"
  | "CodePhase"
  | "SubgoalAssumptions"
  | "SubgoalCode"
  | "ConversationTurn"
  | "SideAnchor";

export interface AssumptionItem {
  assumption: string;
  action: string;
}

export interface ColumnAssumptionsContent {
  kind: "column_assumptions";
  // entry order is the render order, so columns stay as pairs, not a map
  columns: Array<[string, AssumptionItem[]]>;
  output: AssumptionItem[];
}

export interface AssumptionListContent {
  kind: "assumption_list";
  items: AssumptionItem[];
}

export interface PlanStepView {
  index: number;
  text: string;
  optional: boolean;
  selected: boolean;
}

export interface PlanContent {
  kind: "plan_steps";
  steps: PlanStepView[];
}

export interface CodeContent {
  kind: "code";
  code: string;
  language_tag: string;
}

export interface AnswerContent {
  kind: "answer";
  text: string;
}

export interface CompletionContent {
  kind: "completion";
}

export interface TaskContent {
  kind: "task";
  query: string;
  dataset_ids: string[];
  strategy: Strategy;
}

export type NodeContent =
  | ColumnAssumptionsContent
  | AssumptionListContent
  | PlanContent
  | CodeContent
  | AnswerContent
  | CompletionContent
  | TaskContent;

export interface ExecutionError {
  type: string;
  message: string;
  traceback: string;
}

export interface VariableSnapshot {
  name: string;
  kind: "scalar" | "sequence" | "dataframe" | "other";
  type_label: string;
  shape: Array<number | null> | null;
  preview: unknown;
}

export interface ExecutionView {
  status: "ok" | "error";
  stdout: string;
  error: ExecutionError | null;
  images: string[];
  variables: VariableSnapshot[];
  duration_ms: number;
}

export interface NodeView {
  id: number;
  kind: NodeKind;
  parent_id: number | null;
  children: number[];
  content: NodeContent;
  edit_state: EditState;
  execution: ExecutionView | null;
}

export interface BranchView {
  id: string;
  label: string;
  active: boolean;
  leaf_id: number;
}

export interface NumericStats {
  min: number;
  max: number;
  mean: number;
  std: number;
  quartiles: [number, number, number];
  count: number;
}

export interface CategoricalStats {
  distinct_count: number;
  frequency_table: Array<[string, number]>;
}

export interface ColumnProfile {
  name: string;
  inferred_type: "numeric" | "categorical" | "boolean" | "text";
  null_count: number;
  sample_values: string[];
  numeric_stats: NumericStats | null;
  categorical_stats: CategoricalStats | null;
}

export interface DatasetView {
  id: string;
  name: string;
  row_count: number;
  columns: ColumnProfile[];
  source_ref: string | null;
}

export interface ThreadView {
  id: string;
  node_id: number;
  kind: "ask_question" | "generate_code" | "side_query";
  query: string;
  selection: [number, number] | null;
  status: "open" | "answered" | "inserted" | "discarded";
  stale: boolean;
  response: NodeContent | null;
  execution: ExecutionView | null;
  mutation_warning: string[];
}

export interface SessionView {
  id: string;
  strategy: Strategy;
  created_at: string;
  datasets: DatasetView[];
  selected: string[];
  state: Record<string, unknown> | null;
  branches: BranchView[];
  path: NodeView[];
  pending: number[];
  threads: ThreadView[];
  last_seq: number;
}

export interface SessionSummary {
  id: string;
  strategy: Strategy;
  created_at: string;
}

export interface CreatedNodes {
  created: NodeView[];
  view: SessionView;
}

export interface EditAck {
  node_id: number;
  edit_state: EditState;
}

/** Structured mutation against a column-assumptions node. A null or
 * omitted column targets the output-assumptions list. */
export interface PhaseAOp {
  op:
    | "add_column"
    | "remove_column"
    | "add_assumption"
    | "edit_assumption"
    | "remove_assumption";
  column?: string | null;
  index?: number;
  assumption?: string;
  action?: string;
}

export interface SubmitResult {
  outcome: {
    node_id: number;
    new_branch: string | null;
    invalidated: number[];
  };
  regenerated: NodeView[];
  regeneration_error: { error: string; detail: string } | null;
  view: SessionView;
}

export interface SwitchResult {
  replayed: number[];
  view: SessionView;
}

export interface VariablePage {
  name: string;
  columns: string[];
  rows: string[][];
  total_matches: number;
  page: number;
  page_size: number;
}

export interface UploadResult {
  dataset: DatasetView;
  summary: string;
}

export interface StreamEvent {
  seq: number;
  kind: string;
  at: string;
  payload: Record<string, unknown>;
}

export interface ApiErrorBody {
  error: string;
  detail: string;
  request_hash?: string;
  node_ids?: number[];
  attempts?: string[];
}
