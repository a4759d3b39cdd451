// Command implementations. Everything here is editor-agnostic: the vscode
// adapters are injected, so the whole controller is testable with a stub CLI.

import { CliBusyError, CliMissingError, CliRunner } from './cliRunner';
import { ExtensionState } from './state';
import {
	CliResult,
	EditorHost,
	Notifier,
	PanelSink,
	StatusSink,
	describeExitCode,
	parseCompileReport,
} from './types';

const PULLED_LINE = /^pulled \d+ bytes into (.+)$/m;

export interface ControllerHosts {
	panel: PanelSink;
	notifier: Notifier;
	status: StatusSink;
	editor: EditorHost;
	/** Called after every phase change so the host can refresh enablement. */
	onPhaseChange?: (phase: string) => void;
}

export class BridgeController {
	constructor(
		private readonly runner: CliRunner,
		readonly state: ExtensionState,
		private readonly hosts: ControllerHosts,
	) {}

	// -- commands -----------------------------------------------------------

	async login(): Promise<void> {
		if (!this.state.canLogin()) {
			this.hosts.notifier.info('CloudBridge: already logged in.');
			return;
		}
		const result = await this.invoke('login', ['login']);
		if (!result) {
			return;
		}
		this.appendOutput(result);
		if (result.exitCode === 0) {
			this.hosts.status.set('CloudBridge: logged in');
			this.hosts.notifier.info('CloudBridge: logged in.');
		} else {
			this.hosts.status.set('CloudBridge: login failed');
			this.hosts.notifier.error(`CloudBridge login failed: ${describeExitCode(result.exitCode)}`);
		}
	}

	async pull(): Promise<void> {
		if (!this.guardLoggedIn('Pull')) {
			return;
		}
		// Peek at the workspace target first so an unsaved buffer is never
		// silently overwritten; the core CLI overwrites unconditionally.
		const probableTarget = this.lastPulledPath;
		if (probableTarget && this.hosts.editor.hasUnsavedChanges(probableTarget)) {
			const proceed = await this.hosts.editor.confirm(
				`Pull will overwrite unsaved changes in ${probableTarget}. Continue?`,
			);
			if (!proceed) {
				this.hosts.notifier.info('CloudBridge: pull cancelled.');
				return;
			}
		}
		const result = await this.invoke('pull', ['pull']);
		if (!result) {
			return;
		}
		this.appendOutput(result);
		if (result.exitCode !== 0) {
			this.hosts.notifier.error(`CloudBridge pull failed: ${describeExitCode(result.exitCode)}`);
			return;
		}
		const match = PULLED_LINE.exec(result.stdout);
		if (match) {
			this.lastPulledPath = match[1];
			await this.hosts.editor.openFile(match[1]);
		}
		this.hosts.status.set('CloudBridge: pulled');
	}

	private lastPulledPath: string | undefined;

	async pushCurrentFile(): Promise<void> {
		if (!this.guardLoggedIn('Push')) {
			return;
		}
		const file = this.hosts.editor.activeFile();
		if (!file) {
			this.hosts.notifier.error('CloudBridge: no active file to push.');
			return;
		}
		await this.hosts.editor.saveActive();
		const result = await this.invoke('push', ['--format', 'json', 'push', file]);
		if (!result) {
			return;
		}
		const report = parseCompileReport(result.stdout);
		if (report) {
			this.state.lastReport = report;
			this.hosts.panel.appendLine(`[push] ${report.status} in ${report.elapsed_ms} ms`);
			for (const message of report.messages) {
				this.hosts.panel.appendLine(message);
			}
			this.hosts.panel.show();
			if (report.status === 'success') {
				this.hosts.status.set(`CloudBridge: success (${report.elapsed_ms} ms)`);
				this.hosts.notifier.info('CloudBridge: compile succeeded.');
			} else {
				this.hosts.status.set(`CloudBridge: ${report.status}`);
				this.hosts.notifier.error(`CloudBridge: ${report.status}.`);
			}
		} else {
			this.appendOutput(result);
			this.hosts.status.set('CloudBridge: push failed');
			this.hosts.notifier.error(`CloudBridge push failed: ${describeExitCode(result.exitCode)}`);
		}
	}

	async exit(): Promise<void> {
		const result = await this.invoke('exit', ['exit']);
		if (!result) {
			return;
		}
		this.appendOutput(result);
		this.hosts.status.set('CloudBridge: closed');
	}

	async runCycle(): Promise<void> {
		const file = this.hosts.editor.activeFile();
		if (!file) {
			this.hosts.notifier.error('CloudBridge: no active file to run.');
			return;
		}
		await this.hosts.editor.saveActive();
		const result = await this.invoke('run', ['--format', 'json', 'run', file]);
		if (!result) {
			return;
		}
		const report = parseCompileReport(result.stdout);
		if (report) {
			this.state.lastReport = report;
			this.hosts.panel.appendLine(`[run] ${report.status} in ${report.elapsed_ms} ms`);
			for (const message of report.messages) {
				this.hosts.panel.appendLine(message);
			}
			this.hosts.panel.show();
			this.hosts.status.set(`CloudBridge: ${report.status}`);
		} else {
			this.appendOutput(result);
			this.hosts.notifier.error(`CloudBridge run failed: ${describeExitCode(result.exitCode)}`);
		}
	}

	// -- plumbing -----------------------------------------------------------

	private guardLoggedIn(action: string): boolean {
		if (this.state.phase !== 'logged_in') {
			this.hosts.notifier.error(`CloudBridge: ${action} requires login first.`);
			return false;
		}
		return true;
	}

	/** Run the CLI, fold the exit code into the phase mirror, surface errors. */
	private async invoke(
		command: 'login' | 'pull' | 'push' | 'exit' | 'run',
		args: string[],
	): Promise<CliResult | undefined> {
		if (this.runner.busy) {
			this.hosts.notifier.error('CloudBridge: busy with a previous command.');
			return undefined;
		}
		try {
			const result = await this.runner.run(args);
			const phase = this.state.applyCliOutcome(command, result.exitCode);
			this.hosts.onPhaseChange?.(phase);
			return result;
		} catch (err) {
			if (err instanceof CliBusyError) {
				this.hosts.notifier.error('CloudBridge: busy with a previous command.');
			} else if (err instanceof CliMissingError) {
				this.hosts.notifier.error(
					`CloudBridge: CLI not found at '${this.state.cliPath}'. ` +
					'Set the cloudbridge.cliPath setting.',
				);
			} else {
				this.hosts.notifier.error(`CloudBridge: ${String(err)}`);
			}
			return undefined;
		}
	}

	private appendOutput(result: CliResult): void {
		for (const line of result.stdout.split('\n')) {
			if (line.trim().length > 0) {
				this.hosts.panel.appendLine(line);
			}
		}
		for (const line of result.stderr.split('\n')) {
			if (line.trim().length > 0) {
				this.hosts.panel.appendLine(line);
			}
		}
	}
}
