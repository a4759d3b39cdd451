// The only file that touches the vscode API: thin adapters around the
// editor, then straight delegation to the controller.

import * as vscode from 'vscode';

import { CliRunner } from './cliRunner';
import { BridgeController } from './controller';
import { ExtensionState } from './state';
import { EditorHost } from './types';

class VscodeEditorHost implements EditorHost {
	activeFile(): string | undefined {
		const doc = vscode.window.activeTextEditor?.document;
		return doc && doc.uri.scheme === 'file' ? doc.uri.fsPath : undefined;
	}

	async saveActive(): Promise<boolean> {
		const doc = vscode.window.activeTextEditor?.document;
		if (!doc) {
			return false;
		}
		return doc.isDirty ? doc.save() : true;
	}

	hasUnsavedChanges(path: string): boolean {
		return vscode.workspace.textDocuments.some(
			(doc) => doc.uri.fsPath === path && doc.isDirty,
		);
	}

	async confirm(message: string): Promise<boolean> {
		const choice = await vscode.window.showWarningMessage(message, { modal: true }, 'Continue');
		return choice === 'Continue';
	}

	async openFile(path: string): Promise<void> {
		const doc = await vscode.workspace.openTextDocument(vscode.Uri.file(path));
		await vscode.window.showTextDocument(doc, { preview: false });
	}
}

export function activate(context: vscode.ExtensionContext): void {
	const settings = vscode.workspace.getConfiguration('cloudbridge');
	const cliPath = settings.get<string>('cliPath', 'cloudbridge');
	const configPath = settings.get<string>('configPath', 'cloudbridge.conf');

	const panel = vscode.window.createOutputChannel('WebGPU');
	const statusBar = vscode.window.createStatusBarItem(vscode.StatusBarAlignment.Left, 10);
	statusBar.text = 'CloudBridge';
	statusBar.show();

	const state = new ExtensionState(cliPath, configPath);
	const runner = new CliRunner(cliPath, configPath);
	const controller = new BridgeController(runner, state, {
		panel: {
			appendLine: (text) => panel.appendLine(text),
			show: () => panel.show(true),
		},
		notifier: {
			info: (message) => { vscode.window.showInformationMessage(message); },
			error: (message) => { vscode.window.showErrorMessage(message); },
		},
		status: {
			set: (text) => { statusBar.text = text; },
		},
		editor: new VscodeEditorHost(),
		onPhaseChange: (phase) => {
			vscode.commands.executeCommand('setContext', 'cloudbridge.phase', phase);
		},
	});
	vscode.commands.executeCommand('setContext', 'cloudbridge.phase', state.phase);

	context.subscriptions.push(
		panel,
		statusBar,
		vscode.commands.registerCommand('cloudbridge.login', () => controller.login()),
		vscode.commands.registerCommand('cloudbridge.pull', () => controller.pull()),
		vscode.commands.registerCommand('cloudbridge.pushCurrentFile', () => controller.pushCurrentFile()),
		vscode.commands.registerCommand('cloudbridge.exit', () => controller.exit()),
		vscode.commands.registerCommand('cloudbridge.runCycle', () => controller.runCycle()),
	);
}

export function deactivate(): void {
	// Nothing to tear down: sessions belong to the CLI's state file.
}
