// Shared types: the CLI's JSON report schema and exit-code vocabulary.

export interface CompileReport {
	status: 'success' | 'compile_error' | 'runtime_error' | 'timeout';
	messages: string[];
	elapsed_ms: number;
}

export function parseCompileReport(stdout: string): CompileReport | undefined {
	// The report is the last non-empty stdout line when --format json is used.
	const lines = stdout.split('\n').map((l) => l.trim()).filter((l) => l.length > 0);
	for (let i = lines.length - 1; i >= 0; i--) {
		if (!lines[i].startsWith('{')) {
			continue;
		}
		try {
			const parsed = JSON.parse(lines[i]);
			if (typeof parsed.status === 'string' && Array.isArray(parsed.messages)) {
				return parsed as CompileReport;
			}
		} catch {
			return undefined;
		}
	}
	return undefined;
}

// Documented CLI exit codes.
export const EXIT_OK = 0;
export const EXIT_USAGE = 1;
export const EXIT_CONFIG = 2;
export const EXIT_AUTH = 3;
export const EXIT_COMPILE = 4;
export const EXIT_TRANSPORT = 5;

export function describeExitCode(code: number): string {
	switch (code) {
		case EXIT_OK: return 'success';
		case EXIT_USAGE: return 'usage error';
		case EXIT_CONFIG: return 'configuration error';
		case EXIT_AUTH: return 'authentication rejected';
		case EXIT_COMPILE: return 'compile or runtime error';
		case EXIT_TRANSPORT: return 'transport failure or timeout';
		default: return `unexpected exit code ${code}`;
	}
}

export interface CliResult {
	exitCode: number;
	stdout: string;
	stderr: string;
}

// Host seams the controller talks through; the vscode adapters live in
// extension.ts and the tests substitute plain fakes.

export interface PanelSink {
	appendLine(text: string): void;
	show(): void;
}

export interface Notifier {
	info(message: string): void;
	error(message: string): void;
}

export interface StatusSink {
	set(text: string): void;
}

export interface EditorHost {
	/** Absolute path of the active document, or undefined when none. */
	activeFile(): string | undefined;
	/** Save the active document; false when there is nothing to save. */
	saveActive(): Promise<boolean>;
	/** Whether the buffer for this path has unsaved edits. */
	hasUnsavedChanges(path: string): boolean;
	/** Ask before destructive actions; resolves false on decline. */
	confirm(message: string): Promise<boolean>;
	/** Open (or reload) a file in the editor. */
	openFile(path: string): Promise<void>;
}
